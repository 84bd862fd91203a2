//! Functionals on S^2: spherical free energy, Green operator, Onofri.

use super::fields::SphereField;
use crate::error::{bail, Result};
use crate::grids::quadrature::{gauss_legendre, pairwise_sum};
use crate::harmonics::{self, legendre_table};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const MODULE: &str = "functionals";

/// Tolerance on `int f dsigma = 0` for mean-zero inputs.
pub const MEAN_TOL: f64 = 1e-8;

/// Eigenvalues `lambda_l = 1/2 int_{-1}^1 K(t) P_l(t) dt` of the kernel
/// `K = -2 log|omega - omega'|`, by Gauss rules on panels graded toward the
/// logarithmic singularity at t = 1.
pub fn green_eigenvalues(lmax: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&lmax) {
        return Arc::clone(v);
    }
    let q = lmax + 24;
    let (x, w) = gauss_legendre(q);
    // panels in s = 1 - t: [1, 2] and dyadic pieces [2^-(j+1), 2^-j]
    let mut panels = vec![(1.0, 2.0)];
    for j in 0..60 {
        panels.push((0.5f64.powi(j + 1), 0.5f64.powi(j)));
    }
    let mut acc = vec![Vec::new(); lmax + 1];
    for (a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            let s: f64 = mid + half * xi;
            let k = -(2.0 * s).ln();
            let p = legendre_table(lmax, 1.0 - s);
            for l in 0..=lmax {
                acc[l].push(0.5 * half * wi * k * p[l]);
            }
        }
    }
    // remaining [0, eps] with P_l ~ 1
    let eps = 0.5f64.powi(60);
    for v in acc.iter_mut() {
        v.push(0.5 * eps * (1.0 - (2.0 * eps).ln()));
    }
    let eig: Arc<Vec<f64>> = Arc::new(acc.iter().map(|v| pairwise_sum(v)).collect());
    cache.lock().unwrap().insert(lmax, Arc::clone(&eig));
    eig
}

fn check_mean_zero(f: &SphereField, what: &str) -> Result<()> {
    let m = f.integral();
    if !(m.abs() <= MEAN_TOL) {
        bail!(
            Precondition,
            MODULE,
            "{what} needs int f dsigma = 0 within {MEAN_TOL:e}, got {m:e}"
        );
    }
    Ok(())
}

/// `G f(omega) = int G(omega, omega') f(omega') dsigma'` with
/// `G = -2 log|omega - omega'|`, for mean-zero `f`.
pub fn sphere_green_apply(f: &SphereField) -> Result<SphereField> {
    check_mean_zero(f, "sphere_green_apply")?;
    let lmax = f.grid().lmax();
    let eig = green_eigenvalues(lmax);
    if let Some(mut a) = f.zonal_coeffs() {
        a[0] = 0.0;
        for l in 1..=lmax {
            a[l] *= eig[l];
        }
        return Ok(SphereField::from_zonal(f.grid_arc(), |z| harmonics::zonal_eval(&a, z)));
    }
    let mut c = f.spectrum();
    c.scale_degrees(|l| if l == 0 { 0.0 } else { eig[l] });
    Ok(SphereField::from_coeffs(f.grid_arc(), &c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalFreeEnergyParts {
    pub entropy: f64,
    /// `int int f(omega) log|omega - omega'| f(omega') dsigma dsigma'`
    pub interaction: f64,
    pub free_energy: f64,
}

/// `int (f+1) log(f+1) + 2 int int f log|omega - omega'| f`.
pub fn spherical_free_energy_parts(f: &SphereField) -> Result<SphericalFreeEnergyParts> {
    check_mean_zero(f, "spherical_free_energy")?;
    if let Some(v) = f.values().iter().find(|&&v| v + 1.0 < -1e-12) {
        bail!(
            Positivity,
            MODULE,
            "spherical_free_energy needs f + 1 >= 0, found f = {v}"
        );
    }
    let ent = f.map(|v| {
        let p = v + 1.0;
        if p > 0.0 {
            p * p.ln()
        } else {
            0.0
        }
    });
    let entropy = ent.integral();
    let lmax = f.grid().lmax();
    let eig = green_eigenvalues(lmax);
    let terms: Vec<f64> = match f.zonal_coeffs() {
        Some(a) => (1..=lmax).map(|l| eig[l] * a[l] * a[l] / (2 * l + 1) as f64).collect(),
        None => {
            let c = f.spectrum();
            (1..=lmax).map(|l| eig[l] * c.degree_power(l)).collect()
        }
    };
    // log|w - w'| = -G/2
    let interaction = -0.5 * pairwise_sum(&terms);
    Ok(SphericalFreeEnergyParts {
        entropy,
        interaction,
        free_energy: entropy + 2.0 * interaction,
    })
}

pub fn spherical_free_energy(f: &SphereField) -> Result<f64> {
    Ok(spherical_free_energy_parts(f)?.free_energy)
}

/// `int |grad u|^2 dsigma`, spectrally.
pub fn dirichlet_energy(u: &SphereField) -> f64 {
    match u.zonal_coeffs() {
        Some(a) => harmonics::zonal_dirichlet(&a),
        None => u.spectrum().dirichlet(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnofriParts {
    pub dirichlet: f64,
    pub log_exp_integral: f64,
    pub mean: f64,
    pub value: f64,
}

/// `1/4 int |grad u|^2 - log int e^u + int u`. The field is centred first, so
/// adding a constant to `u` does not change the result beyond rounding.
pub fn onofri_parts(u: &SphereField) -> OnofriParts {
    let mean = u.integral();
    let v = u.map(|x| x - mean);
    let dirichlet = dirichlet_energy(&v);
    let lei = v.log_exp_integral();
    OnofriParts {
        dirichlet,
        log_exp_integral: lei + mean,
        mean,
        value: 0.25 * dirichlet - lei,
    }
}

pub fn onofri_functional(u: &SphereField) -> f64 {
    onofri_parts(u).value
}

/// `int |grad log rho|^2 - 4 H(1 | rho)` for a positive probability density.
pub fn onofri_entropy_form_gap(rho: &SphereField) -> Result<f64> {
    if let Some(v) = rho.values().iter().find(|&&v| !(v > 0.0)) {
        bail!(Positivity, MODULE, "entropy form needs rho > 0, found {v}");
    }
    let m = rho.integral();
    if !((m - 1.0).abs() <= 1e-8) {
        bail!(
            Normalization,
            MODULE,
            "entropy form needs int rho = 1 within 1e-8, got {m}"
        );
    }
    let lr = rho.map(f64::ln);
    let h = -lr.integral();
    Ok(dirichlet_energy(&lr) - 4.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::SphereGrid;

    fn grid(nz: usize, nphi: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(nz, nphi).unwrap())
    }

    #[test]
    fn green_eigenvalues_closed_form() {
        let e = green_eigenvalues(64);
        assert!((e[0] - (1.0 - 2.0 * 2f64.ln())).abs() < 1e-12, "{:?}", &e[..4]);
        for l in 1..=64 {
            let exact = 1.0 / (l * (l + 1)) as f64;
            assert!((e[l] - exact).abs() < 1e-12, "l = {l}: {}", e[l]);
        }
    }

    #[test]
    fn green_on_low_harmonics() {
        let g = grid(12, 25);
        let f = SphereField::from_fn(g.clone(), |w| w[2]);
        let gf = sphere_green_apply(&f).unwrap();
        for (a, b) in gf.values().iter().zip(f.values()) {
            assert!((a - 0.5 * b).abs() < 1e-12);
        }
        let f = SphereField::from_fn(g.clone(), |w| w[0] * w[1]);
        let gf = sphere_green_apply(&f).unwrap();
        for (a, b) in gf.values().iter().zip(f.values()) {
            assert!((a - b / 6.0).abs() < 1e-12);
        }
        let zero = sphere_green_apply(&SphereField::zero(g.clone())).unwrap();
        assert!(zero.values().iter().all(|v| v.abs() < 1e-15));
        let bad = SphereField::from_fn(g, |w| 1.0 + w[2]);
        assert!(sphere_green_apply(&bad).is_err());
    }

    #[test]
    fn onofri_examples() {
        let g = grid(64, 129);
        assert_eq!(onofri_functional(&SphereField::zero(g.clone())), 0.0);
        let u = SphereField::from_zonal(g.clone(), |z| -2.0 * (1f64.cosh() + 1f64.sinh() * z).ln());
        let p = onofri_parts(&u);
        assert!(p.value.abs() < 1e-12);
        assert!((p.mean + 0.6260705709986629).abs() < 1e-12);
        assert!((p.dirichlet - 2.5042822839946517).abs() < 1e-12);
        let eps = 0.1f64;
        let u = SphereField::from_fn(g, |w| eps * w[2]);
        let exact = eps * eps / 6.0 - (eps.sinh() / eps).ln();
        assert!(
            (onofri_functional(&u) - exact).abs() < 1e-15,
            "{}",
            onofri_functional(&u)
        );
    }

    proptest::proptest! {
        #[test]
        fn onofri_ignores_constants(
            a in proptest::collection::vec(-1.0f64..1.0, 4),
            c in -50.0f64..50.0,
        ) {
            let g = grid(12, 25);
            let u = SphereField::from_fn(g, |w| a[0] * w[0] + a[1] * w[1] * w[2] + a[2] * w[2] + a[3] * w[0] * w[0]);
            let j = onofri_functional(&u);
            let jc = onofri_functional(&u.map(|x| x + c));
            // centring removes c up to the rounding of the shifted mean
            proptest::prop_assert!((j - jc).abs() <= 1e-13 * (1.0 + c.abs()), "{} vs {}", j, jc);
        }
    }

    #[test]
    fn dirichlet_of_z() {
        let g = grid(8, 1);
        let u = SphereField::from_zonal(g, |z| z);
        assert!((dirichlet_energy(&u) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn free_energy_of_optimizer_is_zero() {
        let g = grid(96, 1);
        let f = SphereField::from_zonal(g, |z| (0.7f64.cosh() + 0.7f64.sinh() * z).powi(-2) - 1.0);
        let e = spherical_free_energy(&f).unwrap();
        assert!(e.abs() < 1e-10, "{e}");
        assert_eq!(spherical_free_energy(&f.map(|_| 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn entropy_form_gap() {
        let g = grid(48, 97);
        let one = SphereField::from_zonal(g.clone(), |_| 1.0);
        assert!(onofri_entropy_form_gap(&one).unwrap().abs() < 1e-15);
        let rho = SphereField::from_fn(g.clone(), |w| {
            let n = [0.0, 0.6, 0.8];
            (0.5f64.cosh() + 0.5f64.sinh() * (n[0] * w[0] + n[1] * w[1] + n[2] * w[2])).powi(-2)
        });
        assert!(onofri_entropy_form_gap(&rho).unwrap().abs() < 1e-10);
        let rho = SphereField::from_zonal(g, |z| 1.0 + 0.5 * z);
        assert!(onofri_entropy_form_gap(&rho).unwrap() > 1e-3);
    }
}
