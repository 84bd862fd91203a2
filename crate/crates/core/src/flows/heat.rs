//! Heat semigroup on S^2 for axisymmetric densities, evolved exactly in the
//! Legendre basis.

use super::FlowTrajectory;
use crate::error::{bail, Result};
use crate::functionals::SphereField;
use crate::grids::quadrature::{gauss_legendre_cached, pairwise_dot, GaussRule};
use crate::grids::SphereGrid;
use crate::harmonics::{legendre_table, legendre_with_derivatives};
use crate::optimizers::nearest_sphere_l1;
use serde::Serialize;
use std::sync::Arc;

const MODULE: &str = "flows";

/// Axisymmetric density `rho(z) = sum_l a_l P_l(z)` on S^2 at time `t`.
/// `a_0 = 1` gives unit mass under the normalized measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatState {
    coeffs: Vec<f64>,
    t: f64,
}

impl HeatState {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.first() {
            Some(a0) if (a0 - 1.0).abs() <= 1e-12 => {}
            _ => bail!(
                Normalization,
                MODULE,
                "heat state needs a_0 = 1 (unit mass), got {:?}",
                coeffs.first()
            ),
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            bail!(Domain, MODULE, "heat state coefficients must be finite");
        }
        Ok(HeatState { coeffs, t: 0.0 })
    }

    /// Legendre projection of a zonal function up to degree `lmax`, rescaled
    /// to unit mass.
    pub fn from_zonal(f: impl Fn(f64) -> f64, lmax: usize) -> Result<Self> {
        let (z, w) = &*gauss_legendre_cached(rule_size(lmax));
        let vals: Vec<f64> = z.iter().map(|&z| f(z)).collect();
        let mut a = vec![0.0; lmax + 1];
        for (k, &zk) in z.iter().enumerate() {
            let p = legendre_table(lmax, zk);
            for l in 0..=lmax {
                a[l] += (2 * l + 1) as f64 / 2.0 * w[k] * vals[k] * p[l];
            }
        }
        if !(a[0] > 0.0) {
            bail!(Normalization, MODULE, "zonal density has nonpositive mass {}", a[0]);
        }
        let m = a[0];
        Self::new(a.iter().map(|c| c / m).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn lmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn density(&self, z: f64) -> f64 {
        let p = legendre_table(self.lmax(), z);
        pairwise_dot(&self.coeffs, &p)
    }

    /// `(rho, d rho / dz)` at height `z`.
    pub fn density_and_slope(&self, z: f64) -> (f64, f64) {
        let (p, d) = legendre_with_derivatives(self.lmax(), z);
        (pairwise_dot(&self.coeffs, &p), pairwise_dot(&self.coeffs, &d))
    }

    /// Density sampled on a sphere grid.
    pub fn field(&self, grid: Arc<SphereGrid>) -> SphereField {
        SphereField::from_zonal(grid, |z| self.density(z))
    }

    fn shifted(&self, dt: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, a)| a * (-((l * (l + 1)) as f64) * dt).exp())
            .collect();
        HeatState { coeffs, t: self.t + dt }
    }

    /// Density and slope at the Gauss nodes, failing on nonpositive values.
    fn nodal(&self) -> Result<(GaussRule, Vec<(f64, f64)>)> {
        let rule = gauss_legendre_cached(rule_size(self.lmax()));
        let vals: Vec<(f64, f64)> = rule.0.iter().map(|&z| self.density_and_slope(z)).collect();
        if let Some((k, v)) = vals.iter().enumerate().find(|(_, v)| !(v.0 > 0.0)) {
            bail!(
                Positivity,
                MODULE,
                "density {} <= 0 at z = {} (t = {}); log rho diagnostics are undefined",
                v.0,
                rule.0[k],
                self.t
            );
        }
        Ok((rule, vals))
    }

    /// `H(1 || rho) = -int log rho dsigma`.
    pub fn entropy(&self) -> Result<f64> {
        let (rule, vals) = self.nodal()?;
        let logs: Vec<f64> = vals.iter().map(|v| v.0.ln()).collect();
        Ok(-0.5 * pairwise_dot(&rule.1, &logs))
    }

    /// `int |grad log rho|^2 dsigma`.
    pub fn fisher(&self) -> Result<f64> {
        let (rule, vals) = self.nodal()?;
        let terms: Vec<f64> = rule
            .0
            .iter()
            .zip(&vals)
            .map(|(z, (r, d))| (1.0 - z * z) * (d / r) * (d / r))
            .collect();
        Ok(0.5 * pairwise_dot(&rule.1, &terms))
    }

    /// `int rho dsigma - 1` by quadrature.
    pub fn mass_error(&self) -> f64 {
        let rule = gauss_legendre_cached(rule_size(self.lmax()));
        let v: Vec<f64> = rule.0.iter().map(|&z| self.density(z)).collect();
        0.5 * pairwise_dot(&rule.1, &v) - 1.0
    }
}

/// Gauss rule size for diagnostics: exact for products of degree-`lmax`
/// polynomials and generous for `log rho`.
fn rule_size(lmax: usize) -> usize {
    (4 * (lmax + 1)).max(512).next_multiple_of(64)
}

/// `rho(t0 + t)`: every degree-l coefficient decays by `e^{-l(l+1) t}`.
pub fn heat_evolve(rho: &HeatState, t: f64) -> Result<HeatState> {
    if !(t >= 0.0) || !t.is_finite() {
        bail!(Domain, MODULE, "heat_evolve needs t >= 0, got {t}");
    }
    Ok(rho.shifted(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationCheck {
    /// Finite-difference rate of `H(1 || rho(t))`.
    pub lhs: f64,
    /// `-int |grad log rho|^2`.
    pub rhs: f64,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Compare the time derivative of `H(1 || rho)` with minus the Fisher
/// information. Centered differences when the state is at least `dt` old,
/// otherwise the second-order forward formula, since stepping the initial
/// datum backwards is not a heat flow.
pub fn dissipation_check(state: &HeatState, dt: f64) -> Result<DissipationCheck> {
    if !(dt > 0.0) || !dt.is_finite() {
        bail!(Domain, MODULE, "dissipation_check needs dt > 0, got {dt}");
    }
    let rhs = -state.fisher()?;
    let lhs = if state.t >= dt {
        (state.shifted(dt).entropy()? - state.shifted(-dt).entropy()?) / (2.0 * dt)
    } else {
        let h0 = state.entropy()?;
        let h1 = state.shifted(dt).entropy()?;
        let h2 = state.shifted(2.0 * dt).entropy()?;
        (-3.0 * h0 + 4.0 * h1 - h2) / (2.0 * dt)
    };
    let residual = (lhs - rhs).abs();
    let tol = 1e-4f64.max(10.0 * dt * dt * rhs.abs().max(1.0));
    Ok(DissipationCheck {
        lhs,
        rhs,
        residual,
        tol,
        pass: residual <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub entropy: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub initial_entropy: f64,
    pub rows: Vec<DecayRow>,
    pub pass: bool,
}

/// Check `H(1 || rho(t)) <= e^{-4t} H(1 || rho(0)) + 1e-8` at each time.
pub fn decay_check(rho0: &HeatState, times: &[f64]) -> Result<DecayReport> {
    let h0 = rho0.entropy()?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let h = heat_evolve(rho0, t)?.entropy()?;
        let bound = (-4.0 * t).exp() * h0;
        rows.push(DecayRow {
            t,
            entropy: h,
            bound,
            pass: h <= bound + 1e-8,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(DecayReport {
        initial_entropy: h0,
        rows,
        pass,
    })
}

/// Sample a heat-flow run at `times` (strictly increasing, starting at 0 or
/// later). Columns: entropy `H(1 || rho)`, L1 distance to the nearest
/// conformal density `e^{u_{t,n}}` (axis-restricted), Fisher information,
/// and the mass error.
pub fn heat_trajectory(rho0: &HeatState, times: &[f64]) -> Result<FlowTrajectory> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        bail!(Domain, MODULE, "heat_trajectory needs strictly increasing times");
    }
    let grid = Arc::new(SphereGrid::axisymmetric(rule_size(rho0.lmax()) / 2)?);
    let mut traj = FlowTrajectory::new("heat");
    let h0 = rho0.entropy()?;
    let mut monotone = true;
    let mut decay_ok = true;
    let mut prev = f64::INFINITY;
    for &t in times {
        let s = heat_evolve(rho0, t)?;
        let h = s.entropy()?;
        let d = nearest_sphere_l1(&s.field(Arc::clone(&grid)), &[]).distance;
        monotone &= h <= prev + 1e-12;
        decay_ok &= h <= (-4.0 * t).exp() * h0 + 1e-8;
        prev = h;
        traj.push(t, h, d, s.fisher()?, s.mass_error());
    }
    traj.set("initial_entropy", h0);
    traj.set("lmax", rho0.lmax());
    traj.set("entropy_monotone", monotone);
    traj.set("decay_bound_holds", decay_ok);
    traj.set("pass", monotone && decay_ok);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConformalParams;
    use crate::optimizers::sphere_optimizer_value;

    fn tilted(a: f64) -> HeatState {
        HeatState::new(vec![1.0, a]).unwrap()
    }

    // -1/2 int_{-1}^{1} log(1 + a z) dz in closed form
    fn tilted_entropy(a: f64) -> f64 {
        let f = |z: f64| {
            let y = 1.0 + a * z;
            (y * y.ln() - y) / a
        };
        -0.5 * (f(1.0) - f(-1.0))
    }

    #[test]
    fn constant_density_is_fixed() {
        let s = HeatState::new(vec![1.0]).unwrap();
        let e = heat_evolve(&s, 3.0).unwrap();
        assert_eq!(e.coeffs(), &[1.0]);
        assert_eq!(e.entropy().unwrap(), 0.0);
        let d = dissipation_check(&s, 1e-3).unwrap();
        assert_eq!((d.lhs, d.rhs, d.residual), (0.0, 0.0, 0.0));
        let r = decay_check(&s, &[0.5]).unwrap();
        assert!(r.pass && r.rows[0].entropy == 0.0);
    }

    #[test]
    fn degree_one_mode_decays_at_rate_two() {
        let e = heat_evolve(&tilted(0.5), 0.7).unwrap();
        assert!((e.coeffs()[1] - 0.5 * (-1.4f64).exp()).abs() < 1e-16);
        assert_eq!(e.coeffs()[0], 1.0);
        assert!(e.mass_error().abs() < 1e-15);
        assert!(heat_evolve(&tilted(0.5), -0.1).is_err());
    }

    #[test]
    fn tilted_entropy_values() {
        let s = tilted(0.5);
        let h0 = s.entropy().unwrap();
        assert!((h0 - tilted_entropy(0.5)).abs() < 1e-14);
        assert!((h0 - 0.045229).abs() < 1e-6);
        let a = 0.5 * (-1.0f64).exp();
        let h = heat_evolve(&s, 0.5).unwrap().entropy().unwrap();
        assert!((h - tilted_entropy(a)).abs() < 1e-14);
        assert!((h - 0.005697).abs() < 1e-6);
        let r = decay_check(&s, &[0.1, 0.25, 0.5, 1.0]).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.rows[2].bound - (-2.0f64).exp() * h0).abs() < 1e-15);
    }

    #[test]
    fn fisher_matches_closed_form() {
        // 1/2 int (1 - z^2) a^2 / (1 + a z)^2 dz = log((1+a)/(1-a)) / a - 2
        let a: f64 = 0.5;
        let exact = ((1.0 + a) / (1.0 - a)).ln() / a - 2.0;
        assert!((tilted(a).fisher().unwrap() - exact).abs() < 1e-13);
    }

    #[test]
    fn dissipation_identity_at_small_dt() {
        let s = tilted(0.5);
        let d = dissipation_check(&s, 1e-3).unwrap();
        assert!(d.pass && d.residual < 1e-5, "{d:?}");
        let later = heat_evolve(&HeatState::new(vec![1.0, 0.4, 0.2, -0.1]).unwrap(), 0.05).unwrap();
        let d = dissipation_check(&later, 1e-3).unwrap();
        assert!(d.pass && d.residual < 1e-5, "{d:?}");
    }

    #[test]
    fn conformal_densities_saturate_entropy_form() {
        // Fisher information equals 4 H(1 || rho) on the optimizer manifold
        for t in [0.3, 1.0] {
            let p = ConformalParams::new(t, [0.0, 0.0, 1.0]).unwrap();
            let s = HeatState::from_zonal(
                |z| sphere_optimizer_value(&p, [(1.0 - z * z).sqrt(), 0.0, z]).exp(),
                120,
            )
            .unwrap();
            let h = s.entropy().unwrap();
            let f = s.fisher().unwrap();
            assert!((f - 4.0 * h).abs() < 1e-10, "t = {t}: {f} vs {}", 4.0 * h);
        }
    }

    #[test]
    fn pure_degree_two_mode_decays_like_exp_minus_12t() {
        let s = HeatState::new(vec![1.0, 0.0, 0.01]).unwrap();
        let h0 = s.entropy().unwrap();
        for t in [0.05, 0.1, 0.2] {
            let ratio = heat_evolve(&s, t).unwrap().entropy().unwrap() / h0;
            assert!(ratio <= (-4.0 * t).exp());
            assert!((ratio / (-12.0 * t).exp() - 1.0).abs() < 0.02, "t = {t}: {ratio}");
        }
        let s = HeatState::new(vec![1.0, 0.0, 0.3]).unwrap();
        assert!(decay_check(&s, &[0.1, 0.5, 1.0]).unwrap().pass);
    }

    #[test]
    fn positivity_is_enforced_for_diagnostics() {
        let s = tilted(1.5);
        assert!(heat_evolve(&s, 0.1).is_ok());
        let e = s.entropy().unwrap_err();
        assert_eq!(e.kind, crate::error::ErrorKind::Positivity);
        assert!(HeatState::new(vec![2.0, 0.1]).is_err());
    }

    #[test]
    fn trajectory_columns() {
        let tr = heat_trajectory(&tilted(0.5), &[0.0, 0.1, 0.5, 1.0]).unwrap();
        assert_eq!(tr.len(), 4);
        assert_eq!(tr.diagnostic_bool("pass"), Some(true));
        assert!(tr.free_energy.windows(2).all(|w| w[1] < w[0]));
        assert!(tr.distance_l1.iter().all(|d| *d >= 0.0));
    }
}
