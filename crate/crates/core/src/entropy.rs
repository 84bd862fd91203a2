//! Relative entropy on probability spaces `(X, nu)` with `nu(X) = 1`, the
//! Legendre pair `H`, `H*`, and the inequalities built from them.
//!
//! Spaces are finite: either an abstract finite set or the nodes of a
//! quadrature grid whose weights act as `nu`.

use crate::error::{bail, Result};
use crate::grids::quadrature::{log_mean_exp, pairwise_dot, pairwise_sum};
use serde::Serialize;

const MODULE: &str = "entropy";

/// Unit-mass tolerance for [`ProbabilityDensity`].
pub const MASS_TOL: f64 = 1e-8;

/// A reference probability measure `nu` on a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    nu: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            bail!(Dimension, MODULE, "finite space needs at least one point");
        }
        if let Some(w) = nu.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            bail!(Domain, MODULE, "reference weights must be positive and finite, got {w}");
        }
        let total = pairwise_sum(&nu);
        if (total - 1.0).abs() > 1e-12 {
            bail!(
                Normalization,
                MODULE,
                "reference measure must have total mass 1, got {total}"
            );
        }
        Ok(FiniteSpace { nu })
    }

    /// `n` points of mass `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(Dimension, MODULE, "finite space needs at least one point");
        }
        FiniteSpace::new(vec![1.0 / n as f64; n])
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        pairwise_dot(&self.nu, f)
    }
}

/// Nonnegative density with `int rho dnu = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity {
    values: Vec<f64>,
    nu: Vec<f64>,
}

impl ProbabilityDensity {
    pub fn new(space: &FiniteSpace, values: Vec<f64>) -> Result<Self> {
        Self::with_weights(space.nu(), values)
    }

    /// Density against quadrature weights that sum to one (sphere, circle).
    pub fn with_weights(nu: &[f64], values: Vec<f64>) -> Result<Self> {
        if values.len() != nu.len() {
            bail!(
                Dimension,
                MODULE,
                "density has {} values for {} points",
                values.len(),
                nu.len()
            );
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            bail!(
                Positivity,
                MODULE,
                "density values must be finite and nonnegative, got {v}"
            );
        }
        let m = pairwise_dot(nu, &values);
        if (m - 1.0).abs() > MASS_TOL {
            bail!(
                Normalization,
                MODULE,
                "density must have unit mass within {MASS_TOL:e}, got {m}"
            );
        }
        Ok(ProbabilityDensity {
            values,
            nu: nu.to_vec(),
        })
    }

    /// The constant density 1.
    pub fn uniform(space: &FiniteSpace) -> Self {
        ProbabilityDensity {
            values: vec![1.0; space.len()],
            nu: space.nu().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }
}

/// A bounded potential `phi` on the same space.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            bail!(Domain, MODULE, "potential must be finite, got {v}");
        }
        Ok(Potential { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn same_space(a: &[f64], b: &[f64]) -> Result<()> {
    if a != b {
        bail!(Dimension, MODULE, "densities live on different reference measures");
    }
    Ok(())
}

/// `H(rho1 | rho0) = int rho1 log(rho1 / rho0) dnu`, with `0 log 0 = 0` and
/// `+inf` when `rho1` charges `{rho0 = 0}`.
pub fn relative_entropy(rho1: &ProbabilityDensity, rho0: &ProbabilityDensity) -> Result<f64> {
    same_space(&rho1.nu, &rho0.nu)?;
    let mut terms = Vec::with_capacity(rho1.values.len());
    for (&p, &q) in rho1.values.iter().zip(&rho0.values) {
        if p == 0.0 {
            terms.push(0.0);
        } else if q == 0.0 {
            return Ok(f64::INFINITY);
        } else {
            terms.push(p * (p / q).ln());
        }
    }
    // the integrand p log(p/q) - p + q is pointwise nonnegative; adding
    // int (q - p) = 0 keeps rounding from producing a negative result
    let shifted: Vec<f64> = rho1
        .values
        .iter()
        .zip(&rho0.values)
        .zip(&terms)
        .map(|((&p, &q), &t)| t - p + q)
        .collect();
    Ok(pairwise_dot(&rho1.nu, &shifted).max(0.0))
}

/// `int |rho1 - rho0| dnu`.
pub fn l1_distance(rho1: &ProbabilityDensity, rho0: &ProbabilityDensity) -> Result<f64> {
    same_space(&rho1.nu, &rho0.nu)?;
    let d: Vec<f64> = rho1
        .values
        .iter()
        .zip(&rho0.values)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(pairwise_dot(&rho1.nu, &d))
}

/// `H(rho1 | rho0) - 1/2 ||rho1 - rho0||_1^2`.
pub fn pinsker_gap(rho1: &ProbabilityDensity, rho0: &ProbabilityDensity) -> Result<f64> {
    let h = relative_entropy(rho1, rho0)?;
    let d = l1_distance(rho1, rho0)?;
    Ok(h - 0.5 * d * d)
}

fn check_potential(nu: &[f64], phi: &Potential) -> Result<()> {
    if phi.values.len() != nu.len() {
        bail!(
            Dimension,
            MODULE,
            "potential has {} values for {} points",
            phi.values.len(),
            nu.len()
        );
    }
    Ok(())
}

/// `H*(phi) = log int e^phi dnu`.
pub fn log_partition(space: &FiniteSpace, phi: &Potential) -> Result<f64> {
    check_potential(space.nu(), phi)?;
    Ok(log_mean_exp(space.nu(), &phi.values))
}

/// `e^phi / int e^phi dnu`, the gradient of `H*`.
pub fn gibbs_density(space: &FiniteSpace, phi: &Potential) -> Result<ProbabilityDensity> {
    let z = log_partition(space, phi)?;
    let values = phi.values.iter().map(|v| (v - z).exp()).collect();
    Ok(ProbabilityDensity {
        values,
        nu: space.nu().to_vec(),
    })
}

/// `H(rho) + H*(phi) - int phi rho - 1/2 ||rho - gibbs(phi)||_1^2`,
/// with `H(rho) = H(rho | 1)`.
pub fn strong_young_gap(rho: &ProbabilityDensity, phi: &Potential) -> Result<f64> {
    check_potential(&rho.nu, phi)?;
    let space = FiniteSpace { nu: rho.nu.clone() };
    let h = relative_entropy(rho, &ProbabilityDensity::uniform(&space))?;
    let hs = log_partition(&space, phi)?;
    let pair = pairwise_dot(
        &rho.nu,
        &rho.values
            .iter()
            .zip(&phi.values)
            .map(|(a, b)| a * b)
            .collect::<Vec<_>>(),
    );
    let g = gibbs_density(&space, phi)?;
    let d = l1_distance(rho, &g)?;
    Ok(h + hs - pair - 0.5 * d * d)
}

/// `H(rho1) - H(rho0) - int (rho1 - rho0) log rho0 - 1/2 ||rho1 - rho0||_1^2`.
pub fn half_convexity_gap(rho1: &ProbabilityDensity, rho0: &ProbabilityDensity) -> Result<f64> {
    same_space(&rho1.nu, &rho0.nu)?;
    if let Some(v) = rho0.values.iter().find(|v| !(**v > 0.0)) {
        bail!(Positivity, MODULE, "half_convexity_gap needs rho0 > 0, found {v}");
    }
    // the first three terms equal H(rho1 | rho0)
    pinsker_gap(rho1, rho0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallSetDelta {
    pub a: f64,
    pub delta: f64,
    /// `H = 0`: the construction collapses and only `rho1 = rho0` is left.
    pub degenerate: bool,
}

/// `a = 2H/eps`, `delta = (a eps / 2) e^{-a}`: sets with `rho0`-mass at most
/// `delta` have `rho1`-mass at most `eps` whenever `H(rho1 | rho0) <= H`.
pub fn small_set_delta(eps: f64, h: f64) -> Result<SmallSetDelta> {
    if !(eps > 0.0) || !eps.is_finite() {
        bail!(Domain, MODULE, "small_set_delta needs eps > 0, got {eps}");
    }
    if !(h >= 0.0) || !h.is_finite() {
        bail!(Domain, MODULE, "small_set_delta needs finite H >= 0, got {h}");
    }
    let a = 2.0 * h / eps;
    Ok(SmallSetDelta {
        a,
        delta: 0.5 * a * eps * (-a).exp(),
        degenerate: h == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point() -> FiniteSpace {
        FiniteSpace::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn two_point_worked_values() {
        let sp = two_point();
        let p = ProbabilityDensity::new(&sp, vec![1.5, 0.5]).unwrap();
        let q = ProbabilityDensity::uniform(&sp);
        let exact = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((relative_entropy(&p, &q).unwrap() - exact).abs() < 1e-15);
        assert!((exact - 0.130812).abs() < 1e-6);
        assert!((pinsker_gap(&p, &q).unwrap() - (exact - 0.125)).abs() < 1e-15);
        let phi = Potential::new(vec![2f64.ln(), 0.0]).unwrap();
        assert!((log_partition(&sp, &phi).unwrap() - 1.5f64.ln()).abs() < 1e-15);
        let g = gibbs_density(&sp, &phi).unwrap();
        assert!((g.values()[0] - 4.0 / 3.0).abs() < 1e-15 && (g.values()[1] - 2.0 / 3.0).abs() < 1e-15);
        let sy = strong_young_gap(&q, &phi).unwrap();
        let exact = 1.5f64.ln() - 0.5 * 2f64.ln() - 0.5 / 9.0;
        assert!((sy - exact).abs() < 1e-15);
        assert!((sy - 0.003335).abs() < 1e-6);
    }

    #[test]
    fn trivial_cases() {
        let sp = FiniteSpace::uniform(3).unwrap();
        let p = ProbabilityDensity::new(&sp, vec![0.5, 1.0, 1.5]).unwrap();
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        assert_eq!(pinsker_gap(&p, &p).unwrap(), 0.0);
        let z = Potential::new(vec![0.0; 3]).unwrap();
        assert_eq!(log_partition(&sp, &z).unwrap(), 0.0);
        assert!(gibbs_density(&sp, &z).unwrap().values().iter().all(|&v| v == 1.0));
        let q = ProbabilityDensity::new(&sp, vec![0.0, 1.5, 1.5]).unwrap();
        assert_eq!(relative_entropy(&p, &q).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&q, &p).unwrap().is_finite());
        let phi = Potential::new(vec![0.3, -1.0, 2.0]).unwrap();
        let g = gibbs_density(&sp, &phi).unwrap();
        assert!(strong_young_gap(&g, &phi).unwrap().abs() < 1e-15);
        // uniform rho0 reduces to Pinsker
        let u = ProbabilityDensity::uniform(&sp);
        assert_eq!(half_convexity_gap(&p, &u).unwrap(), pinsker_gap(&p, &u).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let sp = two_point();
        assert!(ProbabilityDensity::new(&sp, vec![1.0, 0.5]).is_err());
        assert!(ProbabilityDensity::new(&sp, vec![2.5, -0.5]).is_err());
        assert!(FiniteSpace::new(vec![0.4, 0.4]).is_err());
        assert!(small_set_delta(0.0, 1.0).is_err());
        let q = ProbabilityDensity::new(&sp, vec![2.0, 0.0]).unwrap();
        assert!(half_convexity_gap(&ProbabilityDensity::uniform(&sp), &q).is_err());
    }

    #[test]
    fn small_set_examples() {
        let d = small_set_delta(0.5, 1.0).unwrap();
        assert_eq!(d.a, 4.0);
        assert!((d.delta - (-4f64).exp()).abs() < 1e-17);
        let z = small_set_delta(0.5, 0.0).unwrap();
        assert!(z.degenerate && z.delta == 0.0 && z.a == 0.0);
    }

    #[test]
    fn log_partition_is_sup_over_simplex() {
        let sp = FiniteSpace::new(vec![0.2, 0.3, 0.5]).unwrap();
        let phi = Potential::new(vec![0.7, -0.4, 0.1]).unwrap();
        let mut best = f64::NEG_INFINITY;
        let n = 400;
        for i in 0..=n {
            for j in 0..=n - i {
                // masses m_k = rho_k nu_k on the simplex
                let m = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                let rho: Vec<f64> = m.iter().zip(sp.nu()).map(|(a, b)| a / b).collect();
                let p = ProbabilityDensity::new(&sp, rho.clone()).unwrap();
                let h = relative_entropy(&p, &ProbabilityDensity::uniform(&sp)).unwrap();
                let pair: f64 = (0..3).map(|k| m[k] * phi.values()[k]).sum();
                best = best.max(pair - h);
            }
        }
        assert!((best - log_partition(&sp, &phi).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn entropy_is_sup_over_potentials() {
        let sp = two_point();
        let rho = ProbabilityDensity::new(&sp, vec![1.4, 0.6]).unwrap();
        let h = relative_entropy(&rho, &ProbabilityDensity::uniform(&sp)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=20000 {
            let x = -10.0 + 20.0 * i as f64 / 20000.0;
            let phi = Potential::new(vec![x, 0.0]).unwrap();
            let pair = 0.5 * 1.4 * x;
            best = best.max(pair - log_partition(&sp, &phi).unwrap());
        }
        assert!((best - h).abs() < 1e-3);
    }

    fn density_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=8).prop_flat_map(|n| {
            (
                prop::collection::vec(0.05f64..1.0, n),
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    fn build(nu: &[f64], raw: &[f64]) -> Option<(FiniteSpace, ProbabilityDensity)> {
        let t: f64 = nu.iter().sum();
        let nu: Vec<f64> = nu.iter().map(|w| w / t).collect();
        let s = pairwise_sum(&nu);
        let mut nu = nu;
        nu[0] += 1.0 - s;
        let sp = FiniteSpace::new(nu).ok()?;
        let m = sp.integrate(raw);
        if m <= 0.0 {
            return None;
        }
        let vals = raw.iter().map(|v| v / m).collect();
        let p = ProbabilityDensity::new(&sp, vals).ok()?;
        Some((sp, p))
    }

    proptest! {
        #[test]
        fn pinsker_and_half_convexity_hold((nu, a, b) in density_strategy()) {
            if let (Some((sp, p)), Some((_, q))) = (build(&nu, &a), build(&nu, &b)) {
                let q = ProbabilityDensity::new(&sp, q.values().to_vec()).unwrap();
                prop_assert!(relative_entropy(&p, &q).unwrap() >= 0.0);
                prop_assert!(pinsker_gap(&p, &q).unwrap() >= -1e-12);
                prop_assert!(half_convexity_gap(&p, &q).unwrap() >= -1e-12);
            }
        }

        #[test]
        fn strong_young_holds((nu, a, phi) in density_strategy()) {
            if let Some((_, p)) = build(&nu, &a) {
                let phi = Potential::new(phi.iter().map(|x| 6.0 * x - 3.0).collect()).unwrap();
                prop_assert!(strong_young_gap(&p, &phi).unwrap() >= -1e-12);
            }
        }

        #[test]
        fn small_sets_stay_small((nu, a, b) in density_strategy(), eps in 0.05f64..1.0) {
            if let (Some((sp, p)), Some((_, q))) = (build(&nu, &a), build(&nu, &b)) {
                let q = ProbabilityDensity::new(&sp, q.values().to_vec()).unwrap();
                let h = relative_entropy(&p, &q).unwrap();
                prop_assume!(h.is_finite() && h > 0.0);
                let d = small_set_delta(eps, h).unwrap();
                let n = sp.len();
                for mask in 1u32..(1 << n) {
                    let inside = |v: &[f64]| (0..n).filter(|k| mask >> k & 1 == 1).map(|k| v[k] * sp.nu()[k]).sum::<f64>();
                    if inside(q.values()) <= d.delta {
                        prop_assert!(inside(p.values()) <= eps + 1e-12);
                    }
                }
            }
        }
    }
}
