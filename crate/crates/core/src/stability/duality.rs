//! Brute-force Legendre transforms of a convex pair `E <= F` on a box, and
//! the checks behind the duality transfer of quadratic stability.

use crate::error::{bail, Result};
use serde::Serialize;
use std::sync::Arc;

const MODULE: &str = "stability";

pub type Functional = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A pair of convex functions `E <= F` on `[-half_width, half_width]^dim`.
#[derive(Clone)]
pub struct ConvexPairSpec {
    pub dim: usize,
    pub e: Functional,
    pub f: Functional,
    pub e_star_exact: Option<Functional>,
    pub f_star_exact: Option<Functional>,
    /// `F - E >= C dist(x, E_0)^2`.
    pub c: f64,
    /// `E*` is `lambda`-convex.
    pub lambda: f64,
    pub half_width: f64,
    pub primal_points: usize,
    pub dual_points: usize,
    pub slack: f64,
}

impl std::fmt::Debug for ConvexPairSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexPairSpec")
            .field("dim", &self.dim)
            .field("c", &self.c)
            .field("lambda", &self.lambda)
            .field("half_width", &self.half_width)
            .field("primal_points", &self.primal_points)
            .field("dual_points", &self.dual_points)
            .finish()
    }
}

/// `E = sum a_i x_i^2`, `F = sum b_i x_i^2` with `b >= a > 0`, their
/// conjugates `sum y_i^2 / (4 a_i)`, `C = min(b - a)` and
/// `lambda = min 1/(4 a_i)`. Grids default to 401 points per axis in 1D and
/// 101 in 2D or 3D.
pub fn quadratic_pair(a: &[f64], b: &[f64]) -> Result<ConvexPairSpec> {
    let dim = a.len();
    if dim == 0 || dim > 3 || b.len() != dim {
        bail!(Dimension, MODULE, "quadratic pair needs 1 to 3 matching coefficients");
    }
    if a.iter().zip(b).any(|(x, y)| !(*x > 0.0) || !(y >= x)) {
        bail!(Parameter, MODULE, "quadratic pair needs b >= a > 0");
    }
    let quad =
        |c: Vec<f64>| -> Functional { Arc::new(move |x: &[f64]| x.iter().zip(&c).map(|(x, c)| c * x * x).sum()) };
    let conj = |c: Vec<f64>| -> Functional {
        Arc::new(move |y: &[f64]| y.iter().zip(&c).map(|(y, c)| y * y / (4.0 * c)).sum())
    };
    let c = a.iter().zip(b).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
    let lambda = a.iter().map(|x| 0.25 / x).fold(f64::INFINITY, f64::min);
    let points = if dim == 1 { 401 } else { 101 };
    Ok(ConvexPairSpec {
        dim,
        e: quad(a.to_vec()),
        f: quad(b.to_vec()),
        e_star_exact: Some(conj(a.to_vec())),
        f_star_exact: Some(conj(b.to_vec())),
        c,
        lambda,
        half_width: 3.0,
        primal_points: points,
        dual_points: points,
        slack: 2e-2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub dim: usize,
    pub primal_points: usize,
    pub dual_points: usize,
    /// `min E(x) + E*(y) - <x, y>` over all grid pairs.
    pub young_min: f64,
    /// `max F*(y) - E*(y)`.
    pub order_violation: f64,
    pub e_star_error: Option<f64>,
    pub f_star_error: Option<f64>,
    pub primal_equality_count: usize,
    pub dual_equality_count: usize,
    /// Subgradients of `E_0` land in `E*_0` and back.
    pub equality_map_ok: bool,
    /// `max |grad E(x*(y)) - y|` over interior maximizers.
    pub subgradient_residual: f64,
    pub mu: f64,
    /// `min` and `max` of `E* - F* - (lambda mu / 2) dist(y, E*_0)^2`.
    pub bound_margin_min: f64,
    pub bound_margin_max: f64,
    pub lipschitz_constant: f64,
    /// `max |g(y) - g(y')| - L |y - y'|` for `g = grad E*` read off the primal grid.
    pub lipschitz_excess: f64,
    /// Resolution of `g` on the primal grid.
    pub lipschitz_slack: f64,
    pub pass: bool,
}

fn lattice(dim: usize, n: usize, half: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    pts
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `(max_x <x, y> - g(x), argmax)` for each dual point.
fn conjugate(xs: &[Vec<f64>], g: &[f64], ys: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let mut val = Vec::with_capacity(ys.len());
    let mut arg = Vec::with_capacity(ys.len());
    for y in ys {
        let mut best = f64::NEG_INFINITY;
        let mut bi = 0;
        for (i, x) in xs.iter().enumerate() {
            let v = dot(x, y) - g[i];
            if v > best {
                best = v;
                bi = i;
            }
        }
        val.push(best);
        arg.push(bi);
    }
    (val, arg)
}

pub fn toy_duality_demo(spec: &ConvexPairSpec) -> Result<DualityReport> {
    if spec.dim == 0 || spec.dim > 3 {
        bail!(
            Dimension,
            MODULE,
            "duality demo supports dimension 1 to 3, got {}",
            spec.dim
        );
    }
    if spec.primal_points < 3 || spec.dual_points < 3 {
        bail!(Parameter, MODULE, "duality demo needs at least 3 points per axis");
    }
    let xs = lattice(spec.dim, spec.primal_points, spec.half_width);
    let ys = lattice(spec.dim, spec.dual_points, spec.half_width);
    let hx = 2.0 * spec.half_width / (spec.primal_points - 1) as f64;
    let hy = 2.0 * spec.half_width / (spec.dual_points - 1) as f64;
    let ev: Vec<f64> = xs.iter().map(|x| (spec.e)(x)).collect();
    let fv: Vec<f64> = xs.iter().map(|x| (spec.f)(x)).collect();
    if let Some(i) = (0..xs.len()).find(|&i| ev[i] > fv[i] + 1e-12 * (1.0 + ev[i].abs())) {
        bail!(
            Precondition,
            MODULE,
            "E <= F fails at x = {:?}: {} > {}",
            xs[i],
            ev[i],
            fv[i]
        );
    }
    let (es, earg) = conjugate(&xs, &ev, &ys);
    let (fs, _) = conjugate(&xs, &fv, &ys);

    let mut young_min = f64::INFINITY;
    for (j, y) in ys.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            young_min = young_min.min(ev[i] + es[j] - dot(x, y));
        }
    }
    let order_violation = (0..ys.len()).map(|j| fs[j] - es[j]).fold(f64::NEG_INFINITY, f64::max);
    let max_err = |exact: &Option<Functional>, got: &[f64]| {
        exact
            .as_ref()
            .map(|g| ys.iter().zip(got).map(|(y, v)| (g(y) - v).abs()).fold(0.0, f64::max))
    };
    let e_star_error = max_err(&spec.e_star_exact, &es);
    let f_star_error = max_err(&spec.f_star_exact, &fs);

    // equality sets: E_0 exactly on the grid, E*_0 as the Young-equality
    // image of E_0 up to the resolution of the dual grid
    let eq_tol = |v: f64| 1e-12 * (1.0 + v.abs());
    let e0: Vec<usize> = (0..xs.len()).filter(|&i| fv[i] - ev[i] <= eq_tol(ev[i])).collect();
    let tau = 0.25 * hx.max(hy) * hx.max(hy) * spec.dim as f64;
    let es0: Vec<usize> = (0..ys.len())
        .filter(|&j| e0.iter().any(|&i| ev[i] + es[j] - dot(&xs[i], &ys[j]) <= tau))
        .collect();
    let equality_map_ok = !e0.is_empty()
        && !es0.is_empty()
        && es0
            .iter()
            .all(|&j| es[j] - fs[j] <= spec.slack && fv[earg[j]] - ev[earg[j]] <= spec.slack);

    // grad E at interior maximizers should reproduce y
    let interior = |x: &[f64]| x.iter().all(|c| c.abs() < spec.half_width - 1.5 * hx);
    let mut subgradient_residual: f64 = 0.0;
    for (j, y) in ys.iter().enumerate() {
        let x = &xs[earg[j]];
        if !interior(x) {
            continue;
        }
        let mut r2 = 0.0;
        for k in 0..spec.dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += hx;
            xm[k] -= hx;
            let g = ((spec.e)(&xp) - (spec.e)(&xm)) / (2.0 * hx);
            r2 += (g - y[k]) * (g - y[k]);
        }
        subgradient_residual = subgradient_residual.max(r2.sqrt());
    }

    let mu = (4.0 * spec.c * spec.lambda).min(1.0);
    let mut bound_margin_min = f64::INFINITY;
    let mut bound_margin_max = f64::NEG_INFINITY;
    for j in 0..ys.len() {
        let d = es0.iter().map(|&k| dist(&ys[j], &ys[k])).fold(f64::INFINITY, f64::min);
        let m = es[j] - fs[j] - 0.5 * spec.lambda * mu * d * d;
        bound_margin_min = bound_margin_min.min(m);
        bound_margin_max = bound_margin_max.max(m);
    }

    // grad E*(y) is the primal maximizer, known to within the primal spacing
    let lip = 0.5 / spec.lambda;
    let mut lipschitz_excess = f64::NEG_INFINITY;
    for a in 0..ys.len() {
        for b in a + 1..ys.len() {
            let gd = dist(&xs[earg[a]], &xs[earg[b]]);
            lipschitz_excess = lipschitz_excess.max(gd - lip * dist(&ys[a], &ys[b]));
        }
    }
    let lip_slack = hx * (spec.dim as f64).sqrt() + 1e-12;
    let sub_slack = lip * hx + spec.slack;

    let pass = young_min >= -1e-12
        && order_violation <= spec.slack
        && e_star_error.is_none_or(|e| e <= spec.slack)
        && f_star_error.is_none_or(|e| e <= spec.slack)
        && equality_map_ok
        && subgradient_residual <= sub_slack
        && bound_margin_min >= -spec.slack
        && lipschitz_excess <= lip_slack;
    Ok(DualityReport {
        dim: spec.dim,
        primal_points: spec.primal_points,
        dual_points: spec.dual_points,
        young_min,
        order_violation,
        e_star_error,
        f_star_error,
        primal_equality_count: e0.len(),
        dual_equality_count: es0.len(),
        equality_map_ok,
        subgradient_residual,
        mu,
        bound_margin_min,
        bound_margin_max,
        lipschitz_constant: lip,
        lipschitz_excess,
        lipschitz_slack: lip_slack,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratics() {
        let spec = quadratic_pair(&[1.0], &[2.0]).unwrap();
        assert_eq!(spec.lambda, 0.25);
        assert_eq!(spec.c, 1.0);
        let r = toy_duality_demo(&spec).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.mu, 1.0);
        assert!(r.e_star_error.unwrap() < 2e-2 && r.f_star_error.unwrap() < 2e-2);
        // the transferred bound y^2/8 is attained
        assert!(r.bound_margin_max.abs() < 2e-2 && r.bound_margin_min > -2e-2, "{r:?}");
        assert_eq!(r.primal_equality_count, 1);
    }

    #[test]
    fn equal_pair_has_no_gap() {
        let spec = quadratic_pair(&[1.0], &[1.0]).unwrap();
        let r = toy_duality_demo(&spec).unwrap();
        assert!(r.pass);
        assert_eq!(r.order_violation, 0.0);
        assert_eq!(r.primal_equality_count, 401);
        assert!(r.bound_margin_min.abs() < 1e-12 && r.bound_margin_max.abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_anisotropic() {
        let mut spec = quadratic_pair(&[1.0, 0.75], &[2.0, 1.5]).unwrap();
        spec.primal_points = 61;
        spec.dual_points = 61;
        let r = toy_duality_demo(&spec).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.bound_margin_min > 0.0 || r.bound_margin_min > -1e-12);
        assert!(r.bound_margin_max > 0.1);
    }

    #[test]
    fn rejects_order_violation() {
        let mut spec = quadratic_pair(&[1.0], &[2.0]).unwrap();
        std::mem::swap(&mut spec.e, &mut spec.f);
        assert!(toy_duality_demo(&spec).is_err());
        assert!(quadratic_pair(&[2.0], &[1.0]).is_err());
    }
}
