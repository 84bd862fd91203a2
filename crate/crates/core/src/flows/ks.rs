//! Radial critical-mass Keller-Segel flow in cumulative-mass form.
//!
//! With `M(r) = int_{|x|<r} rho dx`, radial solutions of
//! `rho_t = Delta rho - div(rho grad c)`, `-Delta c = rho` satisfy
//! `M_t = M_rr - M_r / r + M M_r / (2 pi r)`. In `s = log r` this is
//! `M_t = e^{-2s} (M_ss - 2 M_s + M M_s / (2 pi))`, discretized with
//! sixth-order centred differences and stepped by SBDF2: the linear part
//! implicitly, the quadratic transport term explicitly.

use super::FlowTrajectory;
use crate::error::{bail, Result};
use crate::functionals::{planar_free_energy, PlanarInput, RadialDensity};
use crate::grids::quadrature::pairwise_dot;
use crate::grids::{Quadrature, RadialGrid, RadialScheme};
use crate::optimizers::{nearest_planar_l1, PlanarSearchConfig};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

const MODULE: &str = "flows";

pub const CRITICAL_MASS: f64 = 8.0 * PI;

/// Tolerance on `|int rho(t) dx - 8 pi|` before a run is aborted.
pub const MASS_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsConfig {
    /// Initial time step; halved whenever the transport CFL number exceeds `cfl`.
    pub dt: f64,
    pub t_end: f64,
    /// Number of log-spaced samples after `t = 0`.
    pub samples: usize,
    /// First positive sample time as a fraction of `t_end`.
    pub first_sample: f64,
    pub cfl: f64,
    pub max_halvings: usize,
    pub search: PlanarSearchConfig,
}

impl Default for KsConfig {
    fn default() -> Self {
        KsConfig {
            dt: 2e-3,
            t_end: 50.0,
            samples: 48,
            first_sample: 1e-3,
            cfl: 0.4,
            max_halvings: 12,
            search: PlanarSearchConfig::default(),
        }
    }
}

/// Cumulative mass on a log-uniform radial grid.
#[derive(Debug, Clone)]
pub struct KsState {
    grid: Arc<RadialGrid>,
    m: Vec<f64>,
    t: f64,
}

impl KsState {
    /// Requires a log-uniform grid and total mass `8 pi` within 1e-6.
    pub fn from_density(rho: &RadialDensity) -> Result<Self> {
        if rho.grid().scheme() != RadialScheme::LogUniform {
            bail!(Domain, MODULE, "Keller-Segel runs need a log-uniform radial grid");
        }
        let mass = rho.mass();
        if !((mass - CRITICAL_MASS).abs() <= 1e-6) {
            bail!(
                Normalization,
                MODULE,
                "Keller-Segel initial mass must be 8 pi within 1e-6, got {mass}"
            );
        }
        let mut m = rho.grid().cumulative(rho.values());
        let scale = CRITICAL_MASS / m[m.len() - 1];
        m.iter_mut().for_each(|x| *x *= scale);
        if m.windows(2).any(|w| w[1] < w[0]) {
            bail!(Positivity, MODULE, "initial cumulative mass is not monotone");
        }
        Ok(KsState {
            grid: rho.grid_arc(),
            m,
            t: 0.0,
        })
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.m
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `rho = e^{-2s} M_s / (2 pi)` by sixth-order differences. Round-off
    /// negatives far below the peak are set to zero.
    pub fn density(&self) -> Result<RadialDensity> {
        let ops = Stencils::new(self.m.len(), self.grid.step());
        density_values(&self.grid, &ops, &self.m).and_then(|v| RadialDensity::new(Arc::clone(&self.grid), v))
    }
}

fn density_values(grid: &RadialGrid, ops: &Stencils, m: &[f64]) -> Result<Vec<f64>> {
    let r = grid.nodes();
    let mut v: Vec<f64> = (0..m.len())
        .map(|i| ops.full_d1.apply(i, m) / (2.0 * PI * r[i] * r[i]))
        .collect();
    let peak = v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for (i, x) in v.iter_mut().enumerate() {
        if *x < 0.0 {
            if *x < -1e-10 * peak {
                bail!(
                    Positivity,
                    MODULE,
                    "density {x} < 0 at r = {} (cumulative mass not monotone)",
                    r[i]
                );
            }
            *x = 0.0;
        }
    }
    Ok(v)
}

/// Finite-difference weights for derivatives 0..=`order` at `z` from nodes
/// `x` (Fornberg's recursion).
fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// One stencil per row: first node index and weights.
struct Operator {
    rows: Vec<(usize, Vec<f64>)>,
}

impl Operator {
    fn apply(&self, i: usize, v: &[f64]) -> f64 {
        let (start, w) = &self.rows[i];
        w.iter().zip(&v[*start..]).map(|(a, b)| a * b).sum()
    }
}

struct Stencils {
    /// Centred, order 6 in the interior and lower next to the ends (band 3).
    d1: Operator,
    d2: Operator,
    /// Seven-point, one-sided near the ends.
    full_d1: Operator,
}

impl Stencils {
    fn new(n: usize, h: f64) -> Self {
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        let mut full = Vec::with_capacity(n);
        for i in 0..n {
            let k = 3.min(i).min(n - 1 - i);
            let xs: Vec<f64> = (0..2 * k + 1).map(|j| j as f64 - k as f64).collect();
            let w = fd_weights(0.0, &xs, 2);
            d1.push((i - k, w[1].iter().map(|c| c / h).collect()));
            d2.push((i - k, w[2].iter().map(|c| c / (h * h)).collect()));
            let start = i.saturating_sub(3).min(n - 7);
            let xs: Vec<f64> = (0..7).map(|j| (start + j) as f64 - i as f64).collect();
            let w = fd_weights(0.0, &xs, 1);
            full.push((start, w[1].iter().map(|c| c / h).collect()));
        }
        Stencils {
            d1: Operator { rows: d1 },
            d2: Operator { rows: d2 },
            full_d1: Operator { rows: full },
        }
    }
}

/// Banded LU without pivoting (the implicit matrices are diagonally
/// dominated by the time-derivative term plus a positive diffusion).
struct BandedLu {
    n: usize,
    b: usize,
    a: Vec<f64>,
}

impl BandedLu {
    fn factor(n: usize, b: usize, entries: impl Fn(usize, usize) -> f64) -> Self {
        let w = 2 * b + 1;
        let mut a = vec![0.0; n * w];
        for i in 0..n {
            for j in i.saturating_sub(b)..(i + b + 1).min(n) {
                a[i * w + j + b - i] = entries(i, j);
            }
        }
        for k in 0..n {
            let piv = a[k * w + b];
            for i in k + 1..(k + b + 1).min(n) {
                let f = a[i * w + k + b - i] / piv;
                a[i * w + k + b - i] = f;
                for j in k + 1..(k + b + 1).min(n) {
                    a[i * w + j + b - i] -= f * a[k * w + j + b - k];
                }
            }
        }
        BandedLu { n, b, a }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, 2 * self.b + 1);
        for i in 0..n {
            let mut s = rhs[i];
            for j in i.saturating_sub(b)..i {
                s -= self.a[i * w + j + b - i] * rhs[j];
            }
            rhs[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..(i + b + 1).min(n) {
                s -= self.a[i * w + j + b - i] * rhs[j];
            }
            rhs[i] = s / self.a[i * w + b];
        }
    }
}

struct Solver {
    grid: Arc<RadialGrid>,
    ops: Stencils,
    /// `e^{-2 s_i}`
    e2: Vec<f64>,
    h: f64,
    /// `M_0 = M_1 e^{-2h}`: constant density inside the first node.
    robin: f64,
    top: f64,
}

impl Solver {
    fn new(grid: Arc<RadialGrid>, top: f64) -> Self {
        let n = grid.len();
        let h = grid.step();
        let e2 = grid.nodes().iter().map(|r| 1.0 / (r * r)).collect();
        Solver {
            ops: Stencils::new(n, h),
            grid,
            e2,
            h,
            robin: (2.0 * h).exp(),
            top,
        }
    }

    fn n(&self) -> usize {
        self.e2.len()
    }

    /// Explicit transport term `e^{-2s} M M_s / (2 pi)`.
    fn transport(&self, m: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.e2[i] * m[i] * self.ops.d1.apply(i, m) / (2.0 * PI))
            .collect()
    }

    /// `L M = e^{-2s} (M_ss - 2 M_s)` at interior nodes.
    fn linear(&self, m: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.0
                } else {
                    self.e2[i] * (self.ops.d2.apply(i, m) - 2.0 * self.ops.d1.apply(i, m))
                }
            })
            .collect()
    }

    /// Matrix of `c0 I - dt L` with boundary rows.
    fn matrix(&self, c0: f64, dt: f64) -> BandedLu {
        let n = self.n();
        BandedLu::factor(n, 3, |i, j| {
            if i == 0 {
                return match j {
                    0 => self.robin,
                    1 => -1.0,
                    _ => 0.0,
                };
            }
            if i == n - 1 {
                return if j == i { 1.0 } else { 0.0 };
            }
            let lin = |op: &Operator| {
                let (start, w) = &op.rows[i];
                if j >= *start && j < start + w.len() {
                    w[j - start]
                } else {
                    0.0
                }
            };
            let l = self.e2[i] * (lin(&self.ops.d2) - 2.0 * lin(&self.ops.d1));
            let diag = if i == j { c0 } else { 0.0 };
            diag - dt * l
        })
    }

    /// CFL number of the explicit part: transport speed `e^{-2s} M / 2 pi`
    /// in grid cells per step, and the reaction rate `rho`.
    fn cfl(&self, m: &[f64], dt: f64) -> f64 {
        let mut c = 0.0f64;
        for i in 1..self.n() - 1 {
            let speed = self.e2[i] * m[i].abs() / (2.0 * PI);
            let rate = self.e2[i] * self.ops.d1.apply(i, m).abs() / (2.0 * PI);
            c = c.max(dt * speed / self.h).max(dt * rate);
        }
        c
    }
}

/// Free energy `H(rho / 8 pi)` and the density itself.
fn free_energy_of(solver: &Solver, m: &[f64]) -> Result<(f64, RadialDensity)> {
    let v = density_values(&solver.grid, &solver.ops, m)?;
    let rho = RadialDensity::new(Arc::clone(&solver.grid), v)?;
    let f = rho.scaled(1.0 / CRITICAL_MASS)?;
    Ok((planar_free_energy(&PlanarInput::Radial(f))?, rho))
}

/// `-dH/dt = (1/8pi) int rho |d_r log rho + M / (2 pi r)|^2 dx`.
fn dissipation_of(solver: &Solver, rho: &RadialDensity, m: &[f64]) -> f64 {
    let r = solver.grid.nodes();
    let v = rho.values();
    let peak = v.iter().fold(0.0f64, |a, &b| a.max(b));
    let terms: Vec<f64> = (0..v.len())
        .map(|i| {
            if v[i] <= 1e-200f64.max(1e-300 * peak) {
                return 0.0;
            }
            let flux = solver.ops.full_d1.apply(i, v) / r[i] + v[i] * m[i] / (2.0 * PI * r[i]);
            flux * flux / v[i]
        })
        .collect();
    pairwise_dot(solver.grid.weights(), &terms) / CRITICAL_MASS
}

fn sample_times(cfg: &KsConfig) -> Vec<f64> {
    let mut ts = vec![0.0];
    let k = cfg.samples.max(1);
    let t0 = (cfg.t_end * cfg.first_sample).min(cfg.t_end);
    for j in 0..k {
        let t = if k == 1 {
            cfg.t_end
        } else {
            t0 * (cfg.t_end / t0).powf(j as f64 / (k - 1) as f64)
        };
        ts.push(t);
    }
    ts
}

/// Evolve `rho0` (mass 8 pi on a log-uniform grid) to `cfg.t_end`.
///
/// Columns: `H(rho / 8 pi)`, `d = inf_g ||rho - 8 pi g||_1`, the free-energy
/// dissipation rate, and `|int rho - 8 pi|`. Diagnostics record the largest
/// per-step free-energy increase, monotonicity of `M`, the largest L1 drift
/// from the initial density, and the check `d <= 8 pi sqrt(8 H) + 1e-4`.
pub fn ks_evolve(rho0: &RadialDensity, cfg: &KsConfig) -> Result<FlowTrajectory> {
    if !(cfg.dt > 0.0) || !(cfg.t_end > 0.0) || !(cfg.cfl > 0.0) {
        bail!(Domain, MODULE, "ks_evolve needs dt, t_end, cfl > 0");
    }
    if !(cfg.first_sample > 0.0 && cfg.first_sample <= 1.0) {
        bail!(
            Domain,
            MODULE,
            "first_sample must lie in (0, 1], got {}",
            cfg.first_sample
        );
    }
    let state = KsState::from_density(rho0)?;
    let solver = Solver::new(state.grid.clone(), CRITICAL_MASS);
    let n = solver.n();
    let mut m = state.m.clone();
    let (mut fe, rho_init) = free_energy_of(&solver, &m)?;
    let rho_init_v = rho_init.values().to_vec();
    let w = solver.grid.weights();

    let times = sample_times(cfg);
    let mut traj = FlowTrajectory::new("keller-segel");
    let mut next = 0usize;
    let mut max_increase = f64::NEG_INFINITY;
    let mut min_increment = f64::INFINITY;
    let mut max_drift = 0.0f64;
    let mut max_mass_error = 0.0f64;
    let mut bound_ok = true;
    let mut bound_margin = f64::INFINITY;
    let mut boundary_warning = false;

    let mut record = |t: f64, fe: f64, rho: &RadialDensity, m: &[f64], traj: &mut FlowTrajectory| -> Result<()> {
        let mass_error = (rho.mass() - CRITICAL_MASS).abs();
        if mass_error > MASS_DRIFT_TOL {
            bail!(
                Conservation,
                MODULE,
                "mass drift {mass_error:e} > {MASS_DRIFT_TOL:e} at t = {t}"
            );
        }
        let unit = rho.scaled(1.0 / CRITICAL_MASS)?;
        let near = nearest_planar_l1(&PlanarInput::Radial(unit), &cfg.search)?;
        let d = CRITICAL_MASS * near.distance;
        boundary_warning |= near.boundary_warning;
        let bound = CRITICAL_MASS * (8.0 * fe.max(0.0)).sqrt() + 1e-4;
        bound_ok &= d <= bound;
        bound_margin = bound_margin.min(bound - d);
        let diff: Vec<f64> = rho
            .values()
            .iter()
            .zip(&rho_init_v)
            .map(|(a, b)| (a - b).abs())
            .collect();
        max_drift = max_drift.max(pairwise_dot(w, &diff));
        max_mass_error = max_mass_error.max(mass_error);
        traj.push(t, fe, d, dissipation_of(&solver, rho, m), mass_error);
        Ok(())
    };
    record(0.0, fe, &rho_init, &m, &mut traj)?;
    next += 1;

    let mut dt = cfg.dt;
    let mut halvings = 0usize;
    let mut steps = 0usize;
    let mut t = 0.0;
    // previous state, transport term and step length
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut lu_euler = solver.matrix(1.0, dt);
    let mut lu_bdf = solver.matrix(1.5, dt);
    let tol_t = 1e-9 * cfg.t_end;
    while t < cfg.t_end - tol_t {
        while solver.cfl(&m, dt) > cfg.cfl {
            if halvings == cfg.max_halvings {
                bail!(
                    StepSize,
                    MODULE,
                    "CFL {} > {} at t = {t} after {halvings} halvings of dt",
                    solver.cfl(&m, dt),
                    cfg.cfl
                );
            }
            halvings += 1;
            dt *= 0.5;
            prev = None;
            lu_euler = solver.matrix(1.0, dt);
            lu_bdf = solver.matrix(1.5, dt);
        }
        // shorten the step to land on the next sample time
        let target = times.get(next).copied().unwrap_or(cfg.t_end).min(cfg.t_end);
        let h = if target - t < dt * (1.0 + 1e-9) { target - t } else { dt };
        // variable-step SBDF2 with ratio w = h / h_prev; restart with Euler
        // when the ratio leaves the zero-stable range
        let w = prev.as_ref().map(|p| h / p.2).filter(|w| *w <= 2.0);
        // solve for the increment: updating M directly lets rounding bias
        // accumulate where M is flat at 8 pi
        let nm = solver.transport(&m);
        let lm = solver.linear(&m);
        let mut rhs = vec![0.0; n];
        match (&prev, w) {
            (Some((mp, np, _)), Some(w)) => {
                let a = w * w / (1.0 + w);
                for i in 0..n {
                    rhs[i] = a * (m[i] - mp[i]) + h * (lm[i] + (1.0 + w) * nm[i] - w * np[i]);
                }
            }
            _ => {
                for i in 0..n {
                    rhs[i] = h * (lm[i] + nm[i]);
                }
            }
        }
        rhs[0] = m[1] - solver.robin * m[0];
        rhs[n - 1] = solver.top - m[n - 1];
        match w {
            Some(w) if h == dt && w == 1.0 => lu_bdf.solve(&mut rhs),
            Some(w) => solver.matrix((1.0 + 2.0 * w) / (1.0 + w), h).solve(&mut rhs),
            None if h == dt => lu_euler.solve(&mut rhs),
            None => solver.matrix(1.0, h).solve(&mut rhs),
        }
        let next_m: Vec<f64> = m.iter().zip(&rhs).map(|(a, d)| a + d).collect();
        prev = Some((std::mem::replace(&mut m, next_m), nm, h));
        t = if h == dt { t + dt } else { target };
        steps += 1;

        let inc = m.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
        min_increment = min_increment.min(inc);
        let (fe_new, rho) = free_energy_of(&solver, &m)?;
        max_increase = max_increase.max(fe_new - fe);
        fe = fe_new;
        if next < times.len() && t >= times[next] - tol_t {
            record(t, fe, &rho, &m, &mut traj)?;
            while next < times.len() && times[next] <= t + tol_t {
                next += 1;
            }
        }
    }
    traj.set("n", n);
    traj.set("r_min", solver.grid.r_min());
    traj.set("r_max", solver.grid.r_max());
    traj.set("t_end", t);
    traj.set("steps", steps);
    traj.set("dt_initial", cfg.dt);
    traj.set("dt_final", dt);
    traj.set("halvings", halvings);
    traj.set("max_free_energy_increase", max_increase);
    traj.set("free_energy_monotone", max_increase <= 1e-8);
    traj.set("min_mass_increment", min_increment);
    traj.set("cumulative_monotone", min_increment >= -1e-12 * CRITICAL_MASS);
    traj.set("max_mass_error", max_mass_error);
    traj.set("max_drift_l1", max_drift);
    traj.set("bound_holds", bound_ok);
    traj.set("bound_margin_min", bound_margin);
    traj.set("search_boundary_warning", boundary_warning);
    Ok(traj)
}

/// Least-squares log-log slopes of the free energy and distance, with
/// envelope checks for the `t^{-1/8}` and `t^{-1/16}` upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub free_energy_slope: Option<f64>,
    pub distance_slope: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    /// `max H t^{1/8}` over the later half of the window (in log t), divided
    /// by the same maximum over the earlier half.
    pub free_energy_envelope_ratio: f64,
    pub distance_envelope_ratio: f64,
    pub free_energy_envelope_ok: bool,
    pub distance_envelope_ok: bool,
    pub flags: Vec<String>,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Below these a sampled value is at the discretization floor and slopes
/// are undefined.
const FREE_ENERGY_FLOOR: f64 = 1e-8;
const DISTANCE_FLOOR: f64 = 1e-6;

pub fn ks_rate_fit(traj: &FlowTrajectory) -> Result<RateFit> {
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.times[i] > 0.0).collect();
    if idx.len() < 3 {
        bail!(
            Precondition,
            MODULE,
            "rate fit needs at least 3 positive sample times, got {}",
            idx.len()
        );
    }
    let t_min = traj.times[idx[0]];
    let t_max = traj.times[idx[idx.len() - 1]];
    if t_max / t_min < 100.0 {
        bail!(
            Precondition,
            MODULE,
            "rate fit needs two decades of t, got [{t_min}, {t_max}]"
        );
    }
    let lt: Vec<f64> = idx.iter().map(|&i| traj.times[i].ln()).collect();
    let mut flags = Vec::new();
    let fit = |vals: &[f64], name: &str, floor: f64, flags: &mut Vec<String>| -> Option<f64> {
        let y: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        if y.iter().any(|v| !(*v > floor)) {
            flags.push(format!("{name}: values at or below {floor:e}, slope undefined"));
            return None;
        }
        Some(slope(&lt, &y.iter().map(|v| v.ln()).collect::<Vec<_>>()))
    };
    let fs = fit(&traj.free_energy, "free_energy", FREE_ENERGY_FLOOR, &mut flags);
    let ds = fit(&traj.distance_l1, "distance", DISTANCE_FLOOR, &mut flags);
    let mid = 0.5 * (lt[0] + lt[lt.len() - 1]);
    let envelope = |vals: &[f64], p: f64| -> f64 {
        let (mut early, mut late) = (0.0f64, 0.0f64);
        for (k, &i) in idx.iter().enumerate() {
            let v = vals[i].max(0.0) * traj.times[i].powf(p);
            if lt[k] <= mid {
                early = early.max(v);
            } else {
                late = late.max(v);
            }
        }
        if early == 0.0 {
            if late == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            late / early
        }
    };
    let fr = envelope(&traj.free_energy, 1.0 / 8.0);
    let dr = envelope(&traj.distance_l1, 1.0 / 16.0);
    Ok(RateFit {
        free_energy_slope: fs,
        distance_slope: ds,
        t_min,
        t_max,
        samples: idx.len(),
        free_energy_envelope_ratio: fr,
        distance_envelope_ratio: dr,
        free_energy_envelope_ok: fr <= 1.0 + 1e-9,
        distance_envelope_ok: dr <= 1.0 + 1e-9,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::make_radial_grid_with_span;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(make_radial_grid_with_span(1e5, n, RadialScheme::LogUniform, (1e10f64).ln()).unwrap())
    }

    fn optimizer(g: Arc<RadialGrid>, s: f64) -> RadialDensity {
        RadialDensity::from_fn(g, |r| CRITICAL_MASS * s * s / (PI * (s * s + r * r).powi(2))).unwrap()
    }

    fn gaussian(g: Arc<RadialGrid>) -> RadialDensity {
        RadialDensity::from_fn(g, |r| CRITICAL_MASS * (-r * r / 2.0).exp() / (2.0 * PI)).unwrap()
    }

    #[test]
    fn fornberg_weights_match_textbook() {
        let xs: Vec<f64> = (-3..=3).map(|j| j as f64).collect();
        let w = fd_weights(0.0, &xs, 2);
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
        for k in 0..7 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14 && (w[2][k] - d2[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_solver_matches_dense() {
        let n = 12;
        let ent = |i: usize, j: usize| {
            if i == j {
                4.0 + i as f64
            } else if i.abs_diff(j) <= 3 {
                ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6
            } else {
                0.0
            }
        };
        let lu = BandedLu::factor(n, 3, ent);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| ent(i, j) * x[j]).sum()).collect();
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn density_round_trip() {
        let g = grid(1024);
        let rho = gaussian(g);
        let st = KsState::from_density(&rho).unwrap();
        let back = st.density().unwrap();
        let err = rho
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn rejects_wrong_mass_and_grid() {
        let g = grid(256);
        let rho = RadialDensity::from_fn(g, |r| (-r * r).exp() / PI).unwrap();
        assert_eq!(
            KsState::from_density(&rho).unwrap_err().kind,
            crate::ErrorKind::Normalization
        );
        let u = Arc::new(RadialGrid::uniform(20.0, 256).unwrap());
        let rho = RadialDensity::from_fn(u, |r| CRITICAL_MASS * (-r * r / 2.0).exp() / (2.0 * PI)).unwrap();
        assert_eq!(KsState::from_density(&rho).unwrap_err().kind, crate::ErrorKind::Domain);
    }

    #[test]
    fn steady_state_is_stationary() {
        let cfg = KsConfig {
            t_end: 10.0,
            samples: 12,
            ..Default::default()
        };
        let tr = ks_evolve(&optimizer(grid(1024), 1.0), &cfg).unwrap();
        let drift = tr.diagnostic_f64("max_drift_l1").unwrap();
        assert!(drift <= 1e-4, "drift {drift}");
        assert!(tr.free_energy.iter().all(|f| f.abs() < 1e-8));
        assert!(tr.distance_l1.iter().all(|d| *d < 1e-6));
        let fit = ks_rate_fit(&tr).unwrap();
        assert!(fit.free_energy_slope.is_none() && fit.distance_slope.is_none() && fit.flags.len() == 2);
    }

    #[test]
    fn gaussian_start_dissipates() {
        let tr = ks_evolve(&gaussian(grid(1024)), &KsConfig::default()).unwrap();
        assert!((tr.free_energy[0] - 0.11593151565841242).abs() < 1e-8);
        assert!(tr.free_energy.windows(2).all(|w| w[1] < w[0]));
        assert!(tr.distance_l1.windows(2).all(|w| w[1] < w[0]));
        assert!(tr.diagnostic_f64("max_free_energy_increase").unwrap() <= 1e-8);
        assert!(tr.diagnostic_f64("max_mass_error").unwrap() <= 1e-6);
        assert_eq!(tr.diagnostic_bool("cumulative_monotone"), Some(true));
        assert_eq!(tr.diagnostic_bool("bound_holds"), Some(true));
        // energy identity between consecutive samples: dH = -int dissipation dt
        for k in 1..12 {
            let dh = tr.free_energy[k + 1] - tr.free_energy[k];
            let dt = tr.times[k + 1] - tr.times[k];
            let pred = -0.5 * (tr.dissipation[k] + tr.dissipation[k + 1]) * dt;
            assert!((dh / pred - 1.0).abs() < 1e-2, "sample {k}: {dh} vs {pred}");
        }
        let fit = ks_rate_fit(&tr).unwrap();
        assert!(fit.free_energy_envelope_ok && fit.distance_envelope_ok, "{fit:?}");
        assert!(fit.free_energy_slope.unwrap() < -0.125 && fit.distance_slope.unwrap() < -0.0625);
    }

    #[test]
    fn refinement_changes_free_energy_little() {
        let base = KsConfig {
            t_end: 2.0,
            samples: 6,
            first_sample: 0.05,
            ..Default::default()
        };
        let coarse = ks_evolve(&gaussian(grid(1024)), &base).unwrap();
        let fine_cfg = KsConfig {
            dt: base.dt / 2.0,
            ..base
        };
        let fine = ks_evolve(&gaussian(grid(2048)), &fine_cfg).unwrap();
        assert_eq!(coarse.len(), fine.len());
        for k in 0..coarse.len() {
            assert!((coarse.times[k] - fine.times[k]).abs() < 1e-9);
            let rel = (coarse.free_energy[k] / fine.free_energy[k] - 1.0).abs();
            assert!(rel < 1e-3, "t = {}: {rel}", coarse.times[k]);
        }
    }

    #[test]
    fn rate_fit_needs_two_decades() {
        let mut tr = FlowTrajectory::new("keller-segel");
        for t in [0.0, 1.0, 2.0, 5.0, 10.0] {
            tr.push(t, 1.0 / (1.0 + t), 1.0, 0.0, 0.0);
        }
        assert_eq!(ks_rate_fit(&tr).unwrap_err().kind, crate::ErrorKind::Precondition);
    }

    #[test]
    fn rate_fit_recovers_power_laws() {
        let mut tr = FlowTrajectory::new("keller-segel");
        for k in 0..30 {
            let t = 0.01 * 1.5f64.powi(k);
            tr.push(t, 0.3 * t.powf(-0.5), 2.0 * t.powf(-0.25), 0.0, 0.0);
        }
        let fit = ks_rate_fit(&tr).unwrap();
        assert!((fit.free_energy_slope.unwrap() + 0.5).abs() < 1e-12);
        assert!((fit.distance_slope.unwrap() + 0.25).abs() < 1e-12);
        assert!(fit.free_energy_envelope_ok && fit.distance_envelope_ok);
        let mut slow = FlowTrajectory::new("keller-segel");
        for k in 0..30 {
            let t = 0.01 * 1.5f64.powi(k);
            slow.push(t, t.powf(-0.05), t.powf(-0.01), 0.0, 0.0);
        }
        let fit = ks_rate_fit(&slow).unwrap();
        assert!(!fit.free_energy_envelope_ok && !fit.distance_envelope_ok);
    }
}
