//! Stability certificates: functional value versus constant times a
//! distance to the optimizer manifold, plus the finite-dimensional duality
//! demonstrator and the sphere transfer chain.

mod chain;
mod duality;

pub use chain::{transfer_chain, TransferChain};
pub use duality::{quadratic_pair, toy_duality_demo, ConvexPairSpec, DualityReport};

use crate::error::{bail, Result};
use crate::functionals::circle::{default_circle_nodes, lebedev_milin_functional};
use crate::functionals::fields::{CircleField, PlanarInput, SphereField};
use crate::functionals::planar::planar_free_energy;
use crate::functionals::sphere::{dirichlet_energy, onofri_functional, spherical_free_energy};
use crate::geometry::{ConformalParams, T_CAP};
use crate::grids::quadrature::{gauss_legendre_cached, pairwise_dot};
use crate::grids::{CircleGrid, Quadrature, SphereGrid};
use crate::harmonics;
use crate::minimize::nelder_mead;
use crate::optimizers::{
    barycenter, nearest_circle_l1, nearest_planar_l1, nearest_sphere_entropy, nearest_sphere_l1,
    planar_l1_distance_radial, sphere_optimizer_dirichlet, PlanarSearchConfig,
};
use serde::Serialize;
use serde_json::json;
use std::sync::Arc;

const MODULE: &str = "stability";

/// Pass tolerance and search options shared by all certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Also run the dense-grid oracle and record its distance.
    pub oracle: bool,
    pub planar_search: PlanarSearchConfig,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            abs_tol: 1e-6,
            rel_tol: 1e-4,
            oracle: false,
            planar_search: PlanarSearchConfig::default(),
        }
    }
}

impl StabilityConfig {
    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol + self.rel_tol * value.abs()
    }
}

/// `gap = value - constant * distance^exponent`; `pass` iff `gap >= -tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub inequality: String,
    pub value: f64,
    pub constant: f64,
    pub distance: f64,
    pub exponent: i32,
    pub gap: f64,
    pub tol: f64,
    pub pass: bool,
    pub grid: serde_json::Value,
    pub search: serde_json::Value,
}

impl StabilityCertificate {
    #[allow(clippy::too_many_arguments)]
    fn build(
        inequality: &str,
        value: f64,
        constant: f64,
        distance: f64,
        exponent: i32,
        cfg: &StabilityConfig,
        grid: serde_json::Value,
        search: serde_json::Value,
    ) -> Self {
        let gap = value - constant * distance.powi(exponent);
        let tol = cfg.tolerance(value);
        StabilityCertificate {
            inequality: inequality.to_string(),
            value,
            constant,
            distance,
            exponent,
            gap,
            tol,
            pass: gap >= -tol,
            grid,
            search,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Dense log-s sweep at `x0 = 0`, used as an oracle for radial densities.
pub fn planar_radial_oracle(
    rho: &crate::functionals::fields::RadialDensity,
    cfg: &PlanarSearchConfig,
    points: usize,
) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..points {
        let ls = cfg.log_s_min + (cfg.log_s_max - cfg.log_s_min) * i as f64 / (points - 1) as f64;
        let d = planar_l1_distance_radial(rho, ls.exp());
        if d < best.0 {
            best = (d, ls.exp());
        }
    }
    best
}

/// `H(rho) >= 1/8 inf_g ||rho - g||_1^2` on the plane.
pub fn planar_stability_certificate(rho: &PlanarInput, cfg: &StabilityConfig) -> Result<StabilityCertificate> {
    let value = planar_free_energy(rho)?;
    let near = nearest_planar_l1(rho, &cfg.planar_search)?;
    let mut search = json!({
        "method": match rho { PlanarInput::Radial(_) => "golden-section over log s", PlanarInput::Cartesian(_) => "nelder-mead over (log s, center)" },
        "s": near.params.s,
        "x0": near.params.x0,
        "evaluations": near.evaluations,
        "boundary_warning": near.boundary_warning,
    });
    if cfg.oracle {
        if let PlanarInput::Radial(d) = rho {
            let (od, os) = planar_radial_oracle(d, &cfg.planar_search, 10_000);
            search["oracle_distance"] = json!(od);
            search["oracle_s"] = json!(os);
        }
    }
    Ok(StabilityCertificate::build(
        "planar log-HLS",
        value,
        0.125,
        near.distance,
        2,
        cfg,
        rho.grid_summary(),
        search,
    ))
}

/// `H_S(f) >= 1/8 inf_v ||(f + 1) - e^v||_1^2` on the sphere.
pub fn spherical_stability_certificate(f: &SphereField, cfg: &StabilityConfig) -> Result<StabilityCertificate> {
    let value = spherical_free_energy(f)?;
    let g = f.map(|v| v + 1.0);
    let near = nearest_sphere_l1(&g, &[]);
    let search = json!({
        "method": "nelder-mead over q = sinh(t) n",
        "t": near.params.t,
        "n": near.params.n,
        "evaluations": near.evaluations,
        "cap_warning": near.cap_warning,
    });
    Ok(StabilityCertificate::build(
        "spherical log-HLS",
        value,
        0.125,
        near.distance,
        2,
        cfg,
        f.grid().summary(),
        search,
    ))
}

fn check_normalized(u: &SphereField, what: &str) -> Result<()> {
    let l = u.log_exp_integral();
    if !(l.abs() <= 1e-8) {
        bail!(
            Normalization,
            MODULE,
            "{what} needs int e^u dsigma = 1 within 1e-8, got log mass {l:e}"
        );
    }
    Ok(())
}

fn q_of(p: &ConformalParams) -> [f64; 3] {
    let s = p.t.sinh();
    [s * p.n[0], s * p.n[1], s * p.n[2]]
}

fn params_of(q: [f64; 3]) -> ConformalParams {
    let s = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    if s == 0.0 {
        ConformalParams::identity()
    } else {
        ConformalParams {
            t: s.asinh(),
            n: [q[0] / s, q[1] / s, q[2] / s],
        }
    }
}

/// Plain Legendre coefficients `c_l(t)` of `-2 log(cosh t + sinh t z)`.
fn optimizer_legendre(t: f64, lmax: usize) -> Vec<f64> {
    // the profile has width ~ e^-t near z = -1
    let n = ((4 * lmax + 64) as f64 + 16.0 * t.exp()).min(4096.0) as usize;
    let rule = gauss_legendre_cached(n.div_ceil(64) * 64);
    let (z, w) = (&rule.0, &rule.1);
    let wz: Vec<f64> = w.iter().map(|x| 0.5 * x).collect();
    let v: Vec<f64> = z.iter().map(|&z| -2.0 * (t.cosh() + t.sinh() * z).ln()).collect();
    harmonics::zonal_analyze(z, &wz, &v, lmax)
}

/// `D(u - v_q) = D(u) + D(v) - 2 sum_l l(l+1) c_l(t) u_l(n) / (2l+1)` for
/// `v_q = u_{t,n}`, `q = sinh(t) n`.
struct GradientDistance {
    du: f64,
    lmax: usize,
    zonal: Option<Vec<f64>>,
    spec: Option<harmonics::ShCoeffs>,
    axis_only: bool,
}

impl GradientDistance {
    fn new(u: &SphereField) -> Self {
        let zonal = u.zonal_coeffs();
        let spec = if zonal.is_none() { Some(u.spectrum()) } else { None };
        GradientDistance {
            du: dirichlet_energy(u),
            lmax: u.grid().lmax(),
            zonal,
            spec,
            axis_only: u.grid().nphi() == 1,
        }
    }

    fn eval(&self, q: [f64; 3]) -> f64 {
        let p = params_of(q);
        if p.t == 0.0 {
            return self.du;
        }
        let c = optimizer_legendre(p.t, self.lmax);
        let uv = match (&self.zonal, &self.spec) {
            (Some(a), _) => {
                let pl = harmonics::legendre_table(self.lmax, p.n[2]);
                a.iter().zip(&pl).map(|(a, p)| a * p).collect()
            }
            (None, Some(c)) => harmonics::evaluate_by_degree(c, p.n),
            (None, None) => unreachable!("one representation is always present"),
        };
        let cross: f64 = (1..=self.lmax)
            .map(|l| (l * (l + 1)) as f64 * c[l] * uv[l] / (2 * l + 1) as f64)
            .sum();
        (self.du + sphere_optimizer_dirichlet(p.t) - 2.0 * cross).max(0.0)
    }
}

fn nearest_gradient(u: &SphereField, starts: &[[f64; 3]]) -> (ConformalParams, f64, usize) {
    let gd = GradientDistance::new(u);
    let q_cap = T_CAP.sinh();
    let mut evals = 0usize;
    let mut obj = |q: &[f64; 3]| -> f64 {
        evals += 1;
        let q = if gd.axis_only { [0.0, 0.0, q[2]] } else { *q };
        let nq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        gd.eval(q) + (nq - q_cap).max(0.0)
    };
    let mut best: Option<([f64; 3], f64)> = None;
    for &q0 in starts {
        let r = nelder_mead(&mut obj, q0, 0.1, 1e-16, 1e-10, 3000);
        let r = nelder_mead(&mut obj, r.x, 0.02, 1e-17, 1e-11, 3000);
        if best.is_none_or(|(_, f)| r.f < f) {
            best = Some((r.x, r.f));
        }
    }
    let (mut q, f) = best.unwrap();
    if gd.axis_only {
        q = [0.0, 0.0, q[2]];
    }
    (params_of(q), f, evals)
}

/// Minimizer over the manifold of `H(e^v | e^u) = int e^v (v - u) dsigma`.
fn nearest_reverse_entropy(u: &SphereField, starts: &[[f64; 3]]) -> (ConformalParams, f64, usize) {
    let grid = u.grid();
    let w = grid.weights();
    let pts = grid.points();
    let axis_only = grid.nphi() == 1;
    let q_cap = T_CAP.sinh();
    let mut evals = 0usize;
    let mut obj = |q: &[f64; 3]| -> f64 {
        evals += 1;
        let q = if axis_only { [0.0, 0.0, q[2]] } else { *q };
        let nq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let s = (1.0 + nq * nq).sqrt();
        let vals: Vec<f64> = pts
            .iter()
            .zip(u.values())
            .map(|(p, uv)| {
                let a = s + q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
                let v = -2.0 * a.ln();
                v.exp() * (v - uv)
            })
            .collect();
        pairwise_dot(w, &vals) + (nq - q_cap).max(0.0)
    };
    let mut best: Option<([f64; 3], f64)> = None;
    for &q0 in starts {
        let r = nelder_mead(&mut obj, q0, 0.1, 1e-16, 1e-10, 3000);
        let r = nelder_mead(&mut obj, r.x, 0.02, 1e-17, 1e-11, 3000);
        if best.is_none_or(|(_, f)| r.f < f) {
            best = Some((r.x, r.f));
        }
    }
    let (mut q, f) = best.unwrap();
    if axis_only {
        q = [0.0, 0.0, q[2]];
    }
    (params_of(q), f.max(0.0), evals)
}

/// The three Onofri stability forms for a normalized `u`:
/// (a) `J >= 1/8 inf D(u - v)`, (b) `J >= 1/2 inf H(e^v | e^u)`,
/// (c) `J >= 1/4 inf ||e^u - e^v||_1^2`.
pub fn onofri_stability_certificates(u: &SphereField, cfg: &StabilityConfig) -> Result<[StabilityCertificate; 3]> {
    check_normalized(u, "onofri_stability_certificates")?;
    let value = onofri_functional(u);
    let entropy_near = nearest_sphere_entropy(u)?;
    let b = barycenter(u);
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    let mut starts = vec![[0.0; 3], q_of(&entropy_near.params)];
    if nb > 1e-12 {
        starts.push([-0.5 * b[0] / nb, -0.5 * b[1] / nb, -0.5 * b[2] / nb]);
    }
    let grid = u.grid().summary();

    let (pa, da, ea) = nearest_gradient(u, &starts);
    let cert_a = StabilityCertificate::build(
        "onofri gradient form",
        value,
        0.125,
        da.sqrt(),
        2,
        cfg,
        grid.clone(),
        json!({"method": "nelder-mead over q = sinh(t) n", "t": pa.t, "n": pa.n, "evaluations": ea}),
    );

    let (pb, hb, eb) = nearest_reverse_entropy(u, &starts);
    let cert_b = StabilityCertificate::build(
        "onofri entropy form",
        value,
        0.5,
        hb,
        1,
        cfg,
        grid.clone(),
        json!({"method": "nelder-mead over q = sinh(t) n", "t": pb.t, "n": pb.n, "evaluations": eb}),
    );

    let eu = u.map(f64::exp);
    let extra = [entropy_near.params, pb];
    let near = nearest_sphere_l1(&eu, &extra);
    let cert_c = StabilityCertificate::build(
        "onofri L1 form",
        value,
        0.25,
        near.distance,
        2,
        cfg,
        grid,
        json!({
            "method": "nelder-mead over q = sinh(t) n",
            "t": near.params.t,
            "n": near.params.n,
            "evaluations": near.evaluations,
            "cap_warning": near.cap_warning,
        }),
    );
    Ok([cert_a, cert_b, cert_c])
}

/// `1/8 D(u) - log int e^u + int u` for `u` whose exponential has zero
/// barycentre (within 1e-8).
pub fn constrained_onofri_gap(u: &SphereField) -> Result<f64> {
    let lei = u.log_exp_integral();
    let b = barycenter(u);
    let m = lei.exp();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() / m;
    if !(nb <= 1e-8) {
        bail!(
            Precondition,
            MODULE,
            "constrained_onofri_gap needs int e^u omega dsigma = 0 within 1e-8, got |b| = {nb:e}"
        );
    }
    let mean = u.integral();
    let centred = u.map(|v| v - mean);
    Ok(0.125 * dirichlet_energy(u) - centred.log_exp_integral())
}

/// `LM(u) >= 1/4 inf ||e^u - P||_1^2` over normalized Poisson kernels.
pub fn circle_stability_certificate(u: &CircleField, cfg: &StabilityConfig) -> Result<StabilityCertificate> {
    let grid = CircleGrid::new(default_circle_nodes(u))?;
    let l = crate::functionals::circle::log_exp_integral(u, &grid);
    if !(l.abs() <= 1e-8) {
        bail!(
            Normalization,
            MODULE,
            "circle certificate needs int e^u dsigma = 1 within 1e-8, got log mass {l:e}"
        );
    }
    let value = lebedev_milin_functional(u);
    let near = nearest_circle_l1(u, &grid);
    Ok(StabilityCertificate::build(
        "lebedev-milin",
        value,
        0.25,
        near.distance,
        2,
        cfg,
        json!({"kind": "circle", "n": grid.node_count(), "modes": u.max_mode()}),
        json!({
            "method": "nelder-mead over r e^{i alpha}",
            "r": near.params.r,
            "alpha": near.params.alpha,
            "evaluations": near.evaluations,
            "cap_warning": near.cap_warning,
        }),
    ))
}

/// Brute-force minimum of `D(u - v)` over a `(t, direction)` grid; an oracle
/// for the gradient-form search.
pub fn gradient_form_oracle(u: &SphereField, t_max: f64, nt: usize, directions: usize) -> f64 {
    let gd = GradientDistance::new(u);
    let dirs: Vec<[f64; 3]> = if gd.axis_only {
        vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
    } else {
        fibonacci_directions(directions)
    };
    let mut best = gd.du;
    for i in 1..=nt {
        let s = (t_max * i as f64 / nt as f64).sinh();
        for n in &dirs {
            best = best.min(gd.eval([s * n[0], s * n[1], s * n[2]]));
        }
    }
    best
}

/// Roughly uniform unit vectors on S^2.
pub fn fibonacci_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Grid used by the sphere examples when none is given.
pub fn default_sphere_grid() -> Arc<SphereGrid> {
    Arc::new(SphereGrid::new(48, 97).expect("valid sizes"))
}
