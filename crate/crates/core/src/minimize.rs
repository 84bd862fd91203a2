//! Derivative-free minimizers used by the nearest-optimizer searches.

const INV_PHI: f64 = 0.6180339887498949;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<X> {
    pub x: X,
    pub f: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, max_evals: usize) -> Minimum<f64> {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while (b - a).abs() > tol && evals < max_evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc <= fd {
        Minimum {
            x: c,
            f: fc,
            evaluations: evals,
        }
    } else {
        Minimum {
            x: d,
            f: fd,
            evaluations: evals,
        }
    }
}

/// Nelder-Mead simplex search started from `x0` with initial edge `step`.
/// Stops when the spread of simplex values falls below `ftol` and the
/// simplex diameter below `xtol`.
pub fn nelder_mead<const N: usize>(
    f: &mut impl FnMut(&[f64; N]) -> f64,
    x0: [f64; N],
    step: f64,
    ftol: f64,
    xtol: f64,
    max_evals: usize,
) -> Minimum<[f64; N]> {
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += step;
        simplex.push((x, f(&x)));
    }
    let mut evals = N + 1;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[N].1 - simplex[0].1;
        let diam = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| (0..N).map(|k| (x[k] - simplex[0].0[k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread <= ftol && diam <= xtol) || evals >= max_evals {
            break;
        }
        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let worst = simplex[N];
        let along = |t: f64| -> [f64; N] {
            let mut y = [0.0; N];
            for k in 0..N {
                y[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            y
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            (x, f(&x))
        } else {
            let x = along(0.5);
            (x, f(&x))
        };
        evals += 1;
        if fc < worst.1.min(fr) {
            simplex[N] = (xc, fc);
            continue;
        }
        let best = simplex[0].0;
        for item in simplex.iter_mut().skip(1) {
            let mut y = [0.0; N];
            for k in 0..N {
                y[k] = best[k] + 0.5 * (item.0[k] - best[k]);
            }
            *item = (y, f(&y));
            evals += 1;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: simplex[0].0,
        f: simplex[0].1,
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let m = golden_section(&mut |x| (x - 1.234).powi(2) + 3.0, -5.0, 5.0, 1e-10, 500);
        assert!((m.x - 1.234).abs() < 1e-7);
        assert!((m.f - 3.0).abs() < 1e-15);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let mut f = |x: &[f64; 2]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(&mut f, [-1.2, 1.0], 0.5, 1e-20, 1e-10, 20_000);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_three_dims() {
        let mut f = |x: &[f64; 3]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2) + 0.5 * (x[2] - 2.0).powi(2);
        let m = nelder_mead(&mut f, [0.0; 3], 0.4, 1e-22, 1e-11, 10_000);
        assert!((m.x[0] - 0.3).abs() < 1e-8 && (m.x[1] + 0.1).abs() < 1e-8 && (m.x[2] - 2.0).abs() < 1e-8);
    }
}
