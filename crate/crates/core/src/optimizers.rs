//! Optimizer manifolds (plane, sphere, circle), nearest-optimizer searches,
//! and conformal recentering on S^2.

use crate::error::{bail, Result};
use crate::functionals::fields::{CircleField, PlanarDensity, PlanarInput, RadialDensity, SphereField};
use crate::geometry::{push_lorentz, CircleParams, ConformalParams, Lorentz, R_CAP, T_CAP};
use crate::grids::quadrature::{pairwise_dot, pairwise_map};
use crate::grids::{CartesianGrid, CircleGrid, Quadrature, RadialGrid, SphereGrid};
use crate::minimize::{golden_section, nelder_mead};
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

const MODULE: &str = "optimizers";

/// Point `h_{s,x0}(x) = s^-2 h(x/s - x0)` of the planar manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarOptimizerParams {
    pub s: f64,
    pub x0: [f64; 2],
}

impl PlanarOptimizerParams {
    pub fn new(s: f64, x0: [f64; 2]) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() || !x0.iter().all(|v| v.is_finite()) {
            bail!(
                Parameter,
                MODULE,
                "planar optimizer needs s > 0 and finite x0, got s = {s}"
            );
        }
        Ok(PlanarOptimizerParams { s, x0 })
    }

    /// Centre of the bump in the plane, `s * x0`.
    pub fn center(&self) -> [f64; 2] {
        [self.s * self.x0[0], self.s * self.x0[1]]
    }
}

/// `h(x) = 1 / (pi (1 + |x|^2)^2)`.
pub fn h(r2: f64) -> f64 {
    1.0 / (PI * (1.0 + r2) * (1.0 + r2))
}

pub fn planar_optimizer_value(p: &PlanarOptimizerParams, x: [f64; 2]) -> f64 {
    let y = [x[0] / p.s - p.x0[0], x[1] / p.s - p.x0[1]];
    h(y[0] * y[0] + y[1] * y[1]) / (p.s * p.s)
}

pub fn planar_optimizer_radial(s: f64, grid: Arc<RadialGrid>) -> Result<RadialDensity> {
    let p = PlanarOptimizerParams::new(s, [0.0, 0.0])?;
    RadialDensity::from_fn(grid, |r| planar_optimizer_value(&p, [r, 0.0]))
}

pub fn planar_optimizer_cartesian(p: &PlanarOptimizerParams, grid: Arc<CartesianGrid>) -> Result<PlanarDensity> {
    PlanarDensity::from_fn(grid, |x| planar_optimizer_value(p, x))
}

/// `u_{t,n}(omega) = -2 log(cosh t + sinh t n.omega)`.
pub fn sphere_optimizer_value(p: &ConformalParams, omega: [f64; 3]) -> f64 {
    let d = p.n[0] * omega[0] + p.n[1] * omega[1] + p.n[2] * omega[2];
    -2.0 * (p.t.cosh() + p.t.sinh() * d).ln()
}

pub fn sphere_optimizer(p: &ConformalParams, grid: Arc<SphereGrid>) -> SphereField {
    if p.n[0] == 0.0 && p.n[1] == 0.0 {
        let sign = p.n[2].signum();
        SphereField::from_zonal(grid, |z| -2.0 * (p.t.cosh() + p.t.sinh() * sign * z).ln())
    } else {
        SphereField::from_fn(grid, |w| sphere_optimizer_value(p, w))
    }
}

/// `int u_{t,n} dsigma = -2 (t coth t - 1)`.
pub fn sphere_optimizer_mean(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        return -2.0 * t * t / 3.0;
    }
    -2.0 * (t / t.tanh() - 1.0)
}

/// `int |grad u_{t,n}|^2 dsigma = 8 (t coth t - 1)`.
pub fn sphere_optimizer_dirichlet(t: f64) -> f64 {
    -4.0 * sphere_optimizer_mean(t)
}

/// `q = sinh(t) n`, the parametrization used by the sphere searches.
fn params_from_q(q: [f64; 3]) -> ConformalParams {
    let s = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    if s == 0.0 {
        return ConformalParams::identity();
    }
    ConformalParams {
        t: s.asinh(),
        n: [q[0] / s, q[1] / s, q[2] / s],
    }
}

fn q_from_params(p: &ConformalParams) -> [f64; 3] {
    let s = p.t.sinh();
    [s * p.n[0], s * p.n[1], s * p.n[2]]
}

/// `e^{u_{t,n}}` in the q-parametrization: `(sqrt(1+|q|^2) + q.omega)^-2`.
fn sphere_optimizer_density_q(q: [f64; 3], omega: [f64; 3]) -> f64 {
    let s = (1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    let a = s + q[0] * omega[0] + q[1] * omega[1] + q[2] * omega[2];
    1.0 / (a * a)
}

/// Log of the normalized Poisson kernel as a Fourier series truncated at
/// `k_max`: `u_hat(0) = log(1 - r^2)`, `u_hat(k) = r^k e^{-ik alpha} / k`.
pub fn circle_optimizer(p: &CircleParams, k_max: usize) -> CircleField {
    let mut c = vec![Complex64::new((1.0 - p.r * p.r).ln(), 0.0)];
    let mut rk = 1.0;
    for k in 1..=k_max {
        rk *= p.r;
        c.push(Complex64::from_polar(rk / k as f64, -(k as f64) * p.alpha));
    }
    CircleField::new(c).expect("k = 0 coefficient is real")
}

/// `(1 - r^2) / (1 - 2 r cos(theta - alpha) + r^2)`.
pub fn poisson_kernel(p: &CircleParams, theta: f64) -> f64 {
    (1.0 - p.r * p.r) / (1.0 - 2.0 * p.r * (theta - p.alpha).cos() + p.r * p.r)
}

/// Search box and effort for [`nearest_planar_l1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarSearchConfig {
    pub log_s_min: f64,
    pub log_s_max: f64,
    pub scan_points: usize,
    pub starts: usize,
    pub tol: f64,
}

impl Default for PlanarSearchConfig {
    fn default() -> Self {
        PlanarSearchConfig {
            log_s_min: -6.0,
            log_s_max: 6.0,
            scan_points: 49,
            starts: 5,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestPlanar {
    pub params: PlanarOptimizerParams,
    pub distance: f64,
    pub evaluations: usize,
    pub boundary_warning: bool,
}

/// `||rho - h_{s,0}||_1` for a radial density. Mass of `h_s` beyond the grid
/// is `1 - int_grid h_s`.
pub fn planar_l1_distance_radial(rho: &RadialDensity, s: f64) -> f64 {
    let g = rho.grid();
    let r = g.nodes();
    let w = g.weights();
    let p = PlanarOptimizerParams { s, x0: [0.0, 0.0] };
    let hv: Vec<f64> = r.iter().map(|&x| planar_optimizer_value(&p, [x, 0.0])).collect();
    let diff: Vec<f64> = hv.iter().zip(rho.values()).map(|(a, b)| (a - b).abs()).collect();
    pairwise_dot(w, &diff) + (1.0 - pairwise_dot(w, &hv)).max(0.0)
}

/// `||rho - h_{s,x0}||_1` for a Cartesian density.
pub fn planar_l1_distance_cartesian(rho: &PlanarDensity, p: &PlanarOptimizerParams) -> f64 {
    let g = rho.grid();
    let n = g.n();
    let w = g.spacing() * g.spacing();
    let v = rho.values();
    let diff = pairwise_map(0, n * n, &|k| (planar_optimizer_value(p, g.point(k)) - v[k]).abs());
    let mass = pairwise_map(0, n * n, &|k| planar_optimizer_value(p, g.point(k)));
    w * diff + (1.0 - w * mass).max(0.0)
}

pub fn planar_l1_distance(rho: &PlanarInput, p: &PlanarOptimizerParams) -> f64 {
    match rho {
        PlanarInput::Radial(d) => planar_l1_distance_radial(d, p.s),
        PlanarInput::Cartesian(d) => planar_l1_distance_cartesian(d, p),
    }
}

fn check_unit_mass(m: f64, what: &str) -> Result<()> {
    if !((m - 1.0).abs() <= crate::functionals::planar::MASS_TOL) {
        bail!(Normalization, MODULE, "{what} needs a unit-mass density, got mass {m}");
    }
    Ok(())
}

/// Local minima of a scan, best first, at most `k` of them.
fn scan_minima(xs: &[f64], fs: &[f64], k: usize) -> Vec<usize> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || fs[i] <= fs[i - 1]) && (i + 1 == n || fs[i] <= fs[i + 1]))
        .collect();
    idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Approximate minimizer of `||rho - h_{s,x0}||_1`. Radial densities are
/// pinned to `x0 = 0`; Cartesian densities also search the centre.
pub fn nearest_planar_l1(rho: &PlanarInput, cfg: &PlanarSearchConfig) -> Result<NearestPlanar> {
    check_unit_mass(rho.mass(), "nearest_planar_l1")?;
    match rho {
        PlanarInput::Radial(d) => Ok(nearest_radial(d, cfg)),
        PlanarInput::Cartesian(d) => Ok(nearest_cartesian(d, cfg)),
    }
}

fn nearest_radial(rho: &RadialDensity, cfg: &PlanarSearchConfig) -> NearestPlanar {
    let mut evals = 0;
    let mut obj = |ls: f64| {
        evals += 1;
        planar_l1_distance_radial(rho, ls.exp())
    };
    let m = cfg.scan_points.max(3);
    let step = (cfg.log_s_max - cfg.log_s_min) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|i| cfg.log_s_min + step * i as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| obj(x)).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in scan_minima(&xs, &fs, cfg.starts) {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(m - 1)];
        let r = golden_section(&mut obj, a, b, cfg.tol, 400);
        let cand = if fs[i] < r.f { (xs[i], fs[i]) } else { (r.x, r.f) };
        best = match best {
            None => Some(cand),
            Some(bst) => {
                let tie = (cand.1 - bst.1).abs() <= 1e-12 * bst.1.abs().max(1e-300);
                if cand.1 < bst.1 && !tie || tie && cand.0 < bst.0 {
                    Some(cand)
                } else {
                    Some(bst)
                }
            }
        };
    }
    let (ls, dist) = best.expect("at least one scan minimum");
    let boundary = (ls - cfg.log_s_min).abs() < 1e-6 || (ls - cfg.log_s_max).abs() < 1e-6;
    NearestPlanar {
        params: PlanarOptimizerParams {
            s: ls.exp(),
            x0: [0.0, 0.0],
        },
        distance: dist,
        evaluations: evals,
        boundary_warning: boundary,
    }
}

fn nearest_cartesian(rho: &PlanarDensity, cfg: &PlanarSearchConfig) -> NearestPlanar {
    let g = rho.grid();
    let n = g.n();
    let w = g.spacing() * g.spacing();
    let v = rho.values();
    // starting centres: barycentre and the location of the maximum
    let mut bary = [0.0; 2];
    for k in 0..n * n {
        let p = g.point(k);
        bary[0] += w * v[k] * p[0];
        bary[1] += w * v[k] * p[1];
    }
    let kmax = (0..n * n)
        .max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a)))
        .unwrap();
    let peak = g.point(kmax);
    let mut evals = 0usize;
    let mut obj = |x: &[f64; 3]| -> f64 {
        evals += 1;
        let ls = x[0].clamp(cfg.log_s_min, cfg.log_s_max);
        let penalty = (x[0] - ls).abs();
        let s = ls.exp();
        let p = PlanarOptimizerParams {
            s,
            x0: [x[1] / s, x[2] / s],
        };
        planar_l1_distance_cartesian(rho, &p) + penalty
    };
    let m = cfg.scan_points.max(3);
    let step = (cfg.log_s_max - cfg.log_s_min) / (m - 1) as f64;
    let mut candidates: Vec<([f64; 3], f64)> = Vec::new();
    for c in [bary, peak] {
        let xs: Vec<f64> = (0..m).map(|i| cfg.log_s_min + step * i as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&ls| obj(&[ls, c[0], c[1]])).collect();
        for i in scan_minima(&xs, &fs, cfg.starts) {
            let r = nelder_mead(&mut obj, [xs[i], c[0], c[1]], step.min(0.5), 1e-13, 1e-9, 4000);
            candidates.push((r.x, r.f));
        }
    }
    let best_f = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tie_tol = 1e-9 * best_f.abs().max(1e-12);
    let (x, f) = candidates
        .iter()
        .filter(|c| c.1 <= best_f + tie_tol)
        .min_by(|a, b| {
            a.0[0]
                .total_cmp(&b.0[0])
                .then(a.0[1].total_cmp(&b.0[1]))
                .then(a.0[2].total_cmp(&b.0[2]))
        })
        .copied()
        .unwrap();
    let s = x[0].exp();
    let boundary = (x[0] - cfg.log_s_min).abs() < 1e-6 || (x[0] - cfg.log_s_max).abs() < 1e-6;
    NearestPlanar {
        params: PlanarOptimizerParams {
            s,
            x0: [x[1] / s, x[2] / s],
        },
        distance: f,
        evaluations: evals,
        boundary_warning: boundary,
    }
}

/// Barycentre `int e^u omega dsigma` and second moment `int e^u omega omega^T`.
pub fn exp_moments(u: &SphereField) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let grid = u.grid();
    let w = grid.weights();
    let pts = grid.points();
    let e: Vec<f64> = u.values().iter().map(|v| v.exp()).collect();
    let m0 = pairwise_dot(w, &e);
    let mut b = [0.0; 3];
    let mut m2 = [[0.0; 3]; 3];
    for i in 0..3 {
        let col: Vec<f64> = pts.iter().zip(&e).map(|(p, e)| e * p[i]).collect();
        b[i] = pairwise_dot(w, &col);
        for j in i..3 {
            let col: Vec<f64> = pts.iter().zip(&e).map(|(p, e)| e * p[i] * p[j]).collect();
            m2[i][j] = pairwise_dot(w, &col);
            m2[j][i] = m2[i][j];
        }
    }
    if grid.nphi() == 1 {
        // single meridian: use the rotational symmetry about the axis
        let t = 0.5 * (m0 - m2[2][2]);
        b = [0.0, 0.0, b[2]];
        m2 = [[t, 0.0, 0.0], [0.0, t, 0.0], [0.0, 0.0, m2[2][2]]];
    }
    (m0, b, m2)
}

pub fn barycenter(u: &SphereField) -> [f64; 3] {
    exp_moments(u).1
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let x = crate::grids::quadrature::solve_dense(a.iter().map(|r| r.to_vec()).collect(), b.to_vec());
    [x[0], x[1], x[2]]
}

fn check_exp_normalized(u: &SphereField, what: &str) -> Result<()> {
    let m = u.log_exp_integral().exp();
    if !((m - 1.0).abs() <= 1e-6) {
        bail!(Normalization, MODULE, "{what} needs int e^u dsigma = 1, got {m}");
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Recentered {
    #[serde(skip)]
    pub field: SphereField,
    pub params: ConformalParams,
    pub iterations: usize,
    pub barycenter_norm: f64,
}

/// Newton iteration over boosts for `int e^{U_tau} omega dsigma = 0`.
///
/// With `m = int e^U`, `b = int e^U omega` and `M = int e^U omega omega^T`,
/// composing with a small boost `v` changes `b` by `-(m I - M) v`, so each
/// step boosts by `v = (m I - M)^-1 b` (capped at unit rapidity).
pub fn recenter(u: &SphereField, tol: f64, max_iter: usize) -> Result<Recentered> {
    check_exp_normalized(u, "recenter")?;
    let mut lambda = Lorentz::identity();
    let mut field = u.clone();
    for it in 0..=max_iter {
        let (m0, b, m2) = exp_moments(&field);
        let nb = norm3(b);
        if nb <= tol {
            return Ok(Recentered {
                field,
                params: lambda.boost_part(),
                iterations: it,
                barycenter_norm: nb,
            });
        }
        if it == max_iter {
            break;
        }
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = if i == j { m0 } else { 0.0 } - m2[i][j];
            }
        }
        let mut v = solve3(a, b);
        let nv = norm3(v);
        if nv > 1.0 {
            v = [v[0] / nv, v[1] / nv, v[2] / nv];
        }
        let step = ConformalParams::from_vector(v)?;
        let composed = lambda.compose(&Lorentz::from_params(&step));
        let p = composed.boost_part();
        if p.t > T_CAP {
            bail!(Convergence, MODULE, "recenter left the t <= {T_CAP} region");
        }
        lambda = Lorentz::from_params(&p);
        field = push_lorentz(u, &lambda);
    }
    let nb = norm3(barycenter(&field));
    bail!(
        Convergence,
        MODULE,
        "recenter did not reach |b| <= {tol:e} in {max_iter} iterations (|b| = {nb:e})"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestSphere {
    pub params: ConformalParams,
    pub value: f64,
    pub evaluations: usize,
    pub cap_warning: bool,
}

/// Minimize `H(e^u | e^{u_{t,n}}) = int e^u (u - u_{t,n}) dsigma` over
/// `q = sinh(t) n` by damped Newton steps from several starts.
pub fn nearest_sphere_entropy(u: &SphereField) -> Result<NearestSphere> {
    check_exp_normalized(u, "nearest_sphere_entropy")?;
    let grid = u.grid();
    let w = grid.weights();
    let pts = grid.points();
    let e: Vec<f64> = u.values().iter().map(|v| v.exp()).collect();
    let eu: Vec<f64> = e.iter().zip(u.values()).map(|(e, u)| e * u).collect();
    let base = pairwise_dot(w, &eu);
    // a single meridian only resolves boosts along the axis
    let axis_only = grid.nphi() == 1;
    let mut evals = 0usize;
    // F(q) = base + 2 int e^u log(S + q.omega)
    let mut eval = |q: [f64; 3], derivs: bool| -> (f64, [f64; 3], [[f64; 3]; 3]) {
        evals += 1;
        let s = (1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let mut fv = Vec::with_capacity(pts.len());
        let mut gsum = [0.0; 3];
        let mut hsum = [[0.0; 3]; 3];
        for (k, p) in pts.iter().enumerate() {
            let a = s + q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
            fv.push(e[k] * a.ln());
            if derivs {
                let g = [q[0] / s + p[0], q[1] / s + p[1], q[2] / s + p[2]];
                for i in 0..3 {
                    gsum[i] += w[k] * e[k] * g[i] / a;
                    for j in 0..3 {
                        let id = if i == j { 1.0 } else { 0.0 };
                        let d2a = id / s - q[i] * q[j] / (s * s * s);
                        hsum[i][j] += w[k] * e[k] * (d2a / a - g[i] * g[j] / (a * a));
                    }
                }
            }
        }
        let f = base + 2.0 * pairwise_dot(w, &fv);
        for i in 0..3 {
            gsum[i] *= 2.0;
            for j in 0..3 {
                hsum[i][j] *= 2.0;
            }
        }
        if axis_only {
            gsum[0] = 0.0;
            gsum[1] = 0.0;
            hsum = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, hsum[2][2]]];
        }
        (f, gsum, hsum)
    };
    let mut b = barycenter(u);
    if axis_only {
        b = [0.0, 0.0, b[2]];
    }
    let nb = norm3(b);
    let mut starts = vec![[0.0; 3]];
    if nb > 1e-12 {
        for k in [0.5, 2.0] {
            starts.push([-k * b[0] / nb, -k * b[1] / nb, -k * b[2] / nb]);
        }
    }
    let q_cap = T_CAP.sinh();
    let mut best: Option<([f64; 3], f64, bool)> = None;
    for q0 in starts {
        let mut q = q0;
        let mut capped = false;
        let (mut f, mut g, mut hs) = eval(q, true);
        for _ in 0..200 {
            let gn = norm3(g);
            if gn < 1e-13 {
                break;
            }
            let mut d = solve3(hs, [-g[0], -g[1], -g[2]]);
            let descent = d[0] * g[0] + d[1] * g[1] + d[2] * g[2];
            if !(descent < 0.0) || !d.iter().all(|x| x.is_finite()) {
                d = [-g[0], -g[1], -g[2]];
            }
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut qn = [q[0] + step * d[0], q[1] + step * d[1], q[2] + step * d[2]];
                let nq = norm3(qn);
                let mut hit = false;
                if nq > q_cap {
                    qn = [qn[0] * q_cap / nq, qn[1] * q_cap / nq, qn[2] * q_cap / nq];
                    hit = true;
                }
                let (fn_, _, _) = eval(qn, false);
                if fn_ <= f {
                    let (f2, g2, h2) = eval(qn, true);
                    q = qn;
                    f = f2;
                    g = g2;
                    hs = h2;
                    capped = hit;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let better = match &best {
            None => true,
            Some((_, bf, _)) => f < *bf - 1e-15,
        };
        if better {
            best = Some((q, f, capped));
        }
    }
    let (q, f, capped) = best.unwrap();
    Ok(NearestSphere {
        params: params_from_q(q),
        value: f.max(0.0),
        evaluations: evals,
        cap_warning: capped,
    })
}

/// `||g - e^{u_{t,n}}||_1` on the grid of `g`.
pub fn sphere_l1_distance(g: &SphereField, p: &ConformalParams) -> f64 {
    let q = q_from_params(p);
    sphere_l1_distance_q(g, q, &g.grid().points())
}

fn sphere_l1_distance_q(g: &SphereField, q: [f64; 3], pts: &[[f64; 3]]) -> f64 {
    let w = g.grid().weights();
    let d: Vec<f64> = pts
        .iter()
        .zip(g.values())
        .map(|(p, v)| (v - sphere_optimizer_density_q(q, *p)).abs())
        .collect();
    pairwise_dot(w, &d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestSphereL1 {
    pub params: ConformalParams,
    pub distance: f64,
    pub evaluations: usize,
    pub cap_warning: bool,
}

/// Minimize `||g - e^{u_{t,n}}||_1` over the sphere manifold for a
/// probability density `g` (e.g. `f + 1` or `e^u`). Extra starting points
/// in `q = sinh(t) n` form may be supplied.
pub fn nearest_sphere_l1(g: &SphereField, extra_starts: &[ConformalParams]) -> NearestSphereL1 {
    let pts = g.grid().points();
    let q_cap = T_CAP.sinh();
    let axis_only = g.grid().nphi() == 1;
    let mut evals = 0usize;
    let mut obj = |q: &[f64; 3]| -> f64 {
        evals += 1;
        let q = &if axis_only { [0.0, 0.0, q[2]] } else { *q };
        let n = norm3(*q);
        let penalty = if n > q_cap { n - q_cap } else { 0.0 };
        sphere_l1_distance_q(g, *q, &pts) + penalty
    };
    // barycentre of g points to where e^{u_{t,n}} should concentrate, i.e. -n
    let w = g.grid().weights();
    let mut b = [0.0; 3];
    for i in 0..3 {
        let col: Vec<f64> = pts.iter().zip(g.values()).map(|(p, v)| v * p[i]).collect();
        b[i] = pairwise_dot(w, &col);
    }
    let nb = norm3(b);
    let mut starts = vec![[0.0; 3]];
    if nb > 1e-12 {
        for k in [0.3, 1.5] {
            starts.push([-k * b[0] / nb, -k * b[1] / nb, -k * b[2] / nb]);
        }
    }
    starts.extend(extra_starts.iter().map(q_from_params));
    let mut best: Option<([f64; 3], f64)> = None;
    for q0 in starts {
        // a restart from the first result guards against early collapse
        let (x, f) = if axis_only {
            let mut obj1 = |z: &[f64; 1]| obj(&[0.0, 0.0, z[0]]);
            let r = nelder_mead(&mut obj1, [q0[2]], 0.2, 1e-15, 1e-10, 2000);
            let r = nelder_mead(&mut obj1, r.x, 0.05, 1e-16, 1e-11, 2000);
            ([0.0, 0.0, r.x[0]], r.f)
        } else {
            let r = nelder_mead(&mut obj, q0, 0.2, 1e-15, 1e-9, 3000);
            let r = nelder_mead(&mut obj, r.x, 0.05, 1e-16, 1e-10, 3000);
            (r.x, r.f)
        };
        if best.is_none_or(|(_, bf)| f < bf) {
            best = Some((x, f));
        }
    }
    let (mut q, f) = best.unwrap();
    if axis_only {
        q = [0.0, 0.0, q[2]];
    }
    NearestSphereL1 {
        params: params_from_q(q),
        distance: f,
        evaluations: evals,
        cap_warning: norm3(q) >= q_cap * (1.0 - 1e-9),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestCircle {
    pub params: CircleParams,
    pub distance: f64,
    pub evaluations: usize,
    pub cap_warning: bool,
}

/// Minimize `||e^u - P_{r,alpha}||_1` over normalized Poisson kernels, in the
/// disk coordinates `r e^{i alpha}`.
pub fn nearest_circle_l1(u: &CircleField, grid: &CircleGrid) -> NearestCircle {
    let theta = grid.theta();
    let eu: Vec<f64> = u.values_on(grid).iter().map(|v| v.exp()).collect();
    let w = grid.weights();
    let mut evals = 0usize;
    let mut obj = |x: &[f64; 2]| -> f64 {
        evals += 1;
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let (rc, penalty) = if r > R_CAP { (R_CAP, r - R_CAP) } else { (r, 0.0) };
        let alpha = x[1].atan2(x[0]);
        let p = CircleParams { r: rc, alpha };
        let d: Vec<f64> = theta
            .iter()
            .zip(&eu)
            .map(|(&t, e)| (e - poisson_kernel(&p, t)).abs())
            .collect();
        pairwise_dot(w, &d) + penalty
    };
    // first Fourier moment of e^u points toward the concentration
    let mut c = [0.0; 2];
    for ((&t, e), wk) in theta.iter().zip(&eu).zip(w) {
        c[0] += wk * e * t.cos();
        c[1] += wk * e * t.sin();
    }
    let starts = [[0.0, 0.0], [0.5 * c[0], 0.5 * c[1]]];
    let mut best: Option<([f64; 2], f64)> = None;
    for s in starts {
        let r = nelder_mead(&mut obj, s, 0.1, 1e-16, 1e-10, 3000);
        let r = nelder_mead(&mut obj, r.x, 0.02, 1e-17, 1e-11, 3000);
        if best.is_none_or(|(_, f)| r.f < f) {
            best = Some((r.x, r.f));
        }
    }
    let (x, f) = best.unwrap();
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt().min(R_CAP);
    NearestCircle {
        params: CircleParams {
            r,
            alpha: x[1].atan2(x[0]).rem_euclid(2.0 * PI),
        },
        distance: f,
        evaluations: evals,
        cap_warning: r >= R_CAP,
    }
}
