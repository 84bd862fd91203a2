//! Low-level quadrature rules and deterministic summation.

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise sum with a fixed split order. Repeated calls are bit-identical.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `w[i] * v[i]`.
pub fn pairwise_dot(w: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), v.len());
    if w.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for (a, b) in w.iter().zip(v) {
            s += a * b;
        }
        return s;
    }
    let mid = w.len() / 2;
    pairwise_dot(&w[..mid], &v[..mid]) + pairwise_dot(&w[mid..], &v[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `lo..hi`.
pub fn pairwise_map(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
    if hi - lo <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        return s;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_map(lo, mid, f) + pairwise_map(mid, hi, f)
}

/// Shared Gauss-Legendre nodes and weights on [-1, 1].
pub type GaussRule = std::sync::Arc<(Vec<f64>, Vec<f64>)>;

/// [`gauss_legendre`] memoized by order.
pub fn gauss_legendre_cached(n: usize) -> GaussRule {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, GaussRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return Arc::clone(r);
    }
    let r = Arc::new(gauss_legendre(n));
    cache.lock().unwrap().insert(n, Arc::clone(&r));
    r
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1]; weights sum to 2.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Solve a small dense system by Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    x
}

/// Bernoulli numbers B_0..B_n (B_1 = -1/2).
fn bernoulli(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let mut s = 0.0;
        let mut binom = 1.0;
        for k in 0..m {
            s += binom * b[k];
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -s / (m + 1) as f64;
    }
    b
}

/// End-corrected trapezoid weights on `n` unit-spaced nodes, exact for
/// polynomials of degree < `order`. All weights are positive for order <= 8.
pub fn gregory_weights(n: usize, order: usize) -> Vec<f64> {
    assert!(n >= 2 * order && order >= 1);
    let bern = bernoulli(order + 1);
    let a: Vec<Vec<f64>> = (0..order)
        .map(|q| (0..order).map(|j| (j as f64).powi(q as i32)).collect())
        .collect();
    let rhs: Vec<f64> = (0..order)
        .map(|q| if q % 2 == 1 { bern[q + 1] / (q + 1) as f64 } else { 0.0 })
        .collect();
    let c = solve_dense(a, rhs);
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    for (j, cj) in c.iter().enumerate() {
        w[j] += cj;
        w[n - 1 - j] += cj;
    }
    w
}

/// Weights `a_k` with `sum a_k f(x_k) = int_0^1 f` for polynomials of degree
/// < `xs.len()`.
pub(crate) fn interval_weights(xs: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let a: Vec<Vec<f64>> = (0..m).map(|q| xs.iter().map(|x| x.powi(q as i32)).collect()).collect();
    let rhs: Vec<f64> = (0..m).map(|q| 1.0 / (q + 1) as f64).collect();
    solve_dense(a, rhs)
}

/// Lagrange interpolation weights at `x` for the nodes `xs`.
pub(crate) fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    xs.iter()
        .enumerate()
        .map(|(k, &xk)| {
            let mut l = 1.0;
            for (j, &xj) in xs.iter().enumerate() {
                if j != k {
                    l *= (x - xj) / (xk - xj);
                }
            }
            l
        })
        .collect()
}

/// Cumulative integrals `C_i = int_{x_0}^{x_i} g` on a uniform grid with
/// spacing `step`, using a local interpolant through `stencil` nodes per
/// interval.
pub fn cumulative_uniform(g: &[f64], step: f64, stencil: usize) -> Vec<f64> {
    let n = g.len();
    assert!(n >= stencil && stencil >= 2);
    let half = stencil / 2 - 1;
    // one weight table per possible stencil start relative to the interval
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(stencil - 1);
    for shift in 0..stencil - 1 {
        let xs: Vec<f64> = (0..stencil).map(|k| k as f64 - shift as f64).collect();
        tables.push(interval_weights(&xs));
    }
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let start = i.saturating_sub(half).min(n - stencil);
        let shift = i - start;
        let w = &tables[shift];
        let mut s = 0.0;
        for k in 0..stencil {
            s += w[k] * g[start + k];
        }
        out[i + 1] = out[i] + s * step;
    }
    out
}

/// `log sum_k w_k e^{v_k}` for weights summing to one. Shifting by the
/// weighted mean and using `expm1` keeps small fields exact (zero maps to 0).
pub fn log_mean_exp(w: &[f64], v: &[f64]) -> f64 {
    let c = pairwise_dot(w, v);
    let top = v.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x - c));
    if top < 600.0 {
        let d: Vec<f64> = v.iter().map(|&x| (x - c).exp_m1()).collect();
        return c + pairwise_dot(w, &d).ln_1p();
    }
    let m = c + top;
    let e: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
    m + pairwise_dot(w, &e).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(12);
        assert!((pairwise_sum(&w) - 2.0).abs() < 1e-14);
        for deg in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}: {q} vs {exact}");
        }
    }

    #[test]
    fn gauss_legendre_large_n_weights_sum() {
        let (x, w) = gauss_legendre(1000);
        assert!((pairwise_sum(&w) - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gregory_positive_and_exact() {
        let n = 40;
        let w = gregory_weights(n, 8);
        assert!(w.iter().all(|&x| x > 0.0));
        for deg in 0..8 {
            let q: f64 = (0..n).map(|j| w[j] * (j as f64).powi(deg)).sum();
            let exact = ((n - 1) as f64).powi(deg + 1) / (deg as f64 + 1.0);
            assert!((q / exact - 1.0).abs() < 1e-12, "deg {deg}");
        }
        let head = [
            0.2948680004409171,
            1.5258793540564375,
            0.2569766865079365,
            1.798907352292769,
        ];
        for (a, b) in w.iter().zip(head) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let n = 200;
        let h = 0.01;
        let g: Vec<f64> = (0..n).map(|i| (i as f64 * h).cos()).collect();
        let c = cumulative_uniform(&g, h, 8);
        for i in 0..n {
            assert!((c[i] - (i as f64 * h).sin()).abs() < 1e-14 * 100.0);
        }
    }

    #[test]
    fn pairwise_is_deterministic() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin() * 1e-3).collect();
        assert_eq!(pairwise_sum(&xs).to_bits(), pairwise_sum(&xs).to_bits());
    }
}
