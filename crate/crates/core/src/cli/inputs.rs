//! Grids and fields built from an [`InputSpec`] and a [`RunConfig`].

use super::config::RunConfig;
use super::spec::{Domain, InputSpec};
use crate::error::{Error, ErrorKind, Result};
use crate::flows::HeatState;
use crate::functionals::circle::{default_circle_nodes, log_exp_integral};
use crate::functionals::{CircleField, PlanarDensity, PlanarInput, RadialDensity, SphereField};
use crate::geometry::{CircleParams, ConformalParams};
use crate::grids::quadrature::gauss_legendre_cached;
use crate::grids::{
    make_radial_grid, make_radial_grid_with_span, CartesianGrid, CircleGrid, RadialGrid, RadialScheme, SphereGrid,
};
use crate::harmonics::{legendre_table, zonal_eval, ShCoeffs};
use crate::optimizers::{circle_optimizer, planar_optimizer_value, sphere_optimizer, PlanarOptimizerParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

const MODULE: &str = "cli";

fn wrong_domain(spec: &InputSpec, want: &str) -> Error {
    Error::new(
        ErrorKind::Parameter,
        MODULE,
        format!(
            "{want} needs a different input; {spec} is a {} spec",
            spec.domain().name()
        ),
    )
}

pub fn radial_grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_radial_grid(
        cfg.rmax,
        cfg.grid_n,
        RadialScheme::LogUniform,
    )?))
}

pub fn ks_grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_radial_grid_with_span(
        cfg.ks_rmax,
        cfg.ks_n,
        RadialScheme::LogUniform,
        cfg.ks_decades * std::f64::consts::LN_10,
    )?))
}

pub fn sphere_grid(cfg: &RunConfig) -> Result<Arc<SphereGrid>> {
    Ok(Arc::new(SphereGrid::new(cfg.sphere_nz, cfg.sphere_nphi)?))
}

/// `z` on the sphere for the planar point at radius `r`.
fn height(r: f64) -> f64 {
    (1.0 - r * r) / (1.0 + r * r)
}

/// Mass of `h_s (1 + eps P_l(z(r)))`. In `z` the measure `h_s dx` becomes
/// `2 s^2 / (s^2 (1 + z) + 1 - z)^2 dz`, a smooth weight.
fn perturbed_mass(s: f64, eps: f64, mode: usize) -> f64 {
    let rule = gauss_legendre_cached(256);
    let (z, w) = (&rule.0, &rule.1);
    let s2 = s * s;
    let mut m = 0.0;
    for (zk, wk) in z.iter().zip(w) {
        let d = s2 * (1.0 + zk) + 1.0 - zk;
        let p = legendre_table(mode, *zk)[mode];
        m += wk * 2.0 * s2 / (d * d) * (1.0 + eps * p);
    }
    m
}

/// Pointwise evaluator of a planar spec; every component has unit mass.
pub fn planar_fn(spec: &InputSpec) -> Box<dyn Fn([f64; 2]) -> f64 + Send + Sync> {
    match spec {
        InputSpec::Gaussian { sigma } => {
            let v = sigma * sigma;
            Box::new(move |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * v)).exp() / (2.0 * PI * v))
        }
        InputSpec::Optimizer { s, x: cx, y: cy } => {
            let p = PlanarOptimizerParams::new(*s, [*cx, *cy]).expect("validated spec");
            Box::new(move |x| planar_optimizer_value(&p, x))
        }
        InputSpec::PerturbedOptimizer { s, eps, mode } => {
            let p = PlanarOptimizerParams::new(*s, [0.0, 0.0]).expect("validated spec");
            let (eps, mode) = (*eps, *mode);
            let mass = perturbed_mass(*s, eps, mode);
            Box::new(move |x| {
                let z = height((x[0] * x[0] + x[1] * x[1]).sqrt());
                planar_optimizer_value(&p, x) * (1.0 + eps * legendre_table(mode, z)[mode]) / mass
            })
        }
        InputSpec::Mixture { parts } => {
            let total: f64 = parts.iter().map(|(w, _)| w).sum();
            let fs: Vec<(f64, _)> = parts.iter().map(|(w, p)| (w / total, planar_fn(p))).collect();
            Box::new(move |x| fs.iter().map(|(w, f)| w * f(x)).sum())
        }
        InputSpec::CriticalMass(inner) => {
            let f = planar_fn(inner);
            Box::new(move |x| 8.0 * PI * f(x))
        }
        _ => Box::new(|_| f64::NAN),
    }
}

fn planar_only(spec: &InputSpec, what: &str) -> Result<()> {
    if spec.domain() != Domain::Planar {
        return Err(wrong_domain(spec, what));
    }
    Ok(())
}

pub fn radial_density(spec: &InputSpec, grid: Arc<RadialGrid>) -> Result<RadialDensity> {
    planar_only(spec, "a radial density")?;
    if !spec.is_radial() {
        return Err(Error::new(
            ErrorKind::Parameter,
            MODULE,
            format!("{spec} is not centred at the origin; a radial grid cannot represent it"),
        ));
    }
    let f = planar_fn(spec);
    RadialDensity::from_fn(grid, |r| f([r, 0.0]))
}

/// Radial grid when the density is centred, otherwise the Cartesian grid
/// (renormalized, since the box cuts off tail mass).
pub fn planar_input(spec: &InputSpec, cfg: &RunConfig) -> Result<PlanarInput> {
    planar_only(spec, "a planar density")?;
    if spec.is_radial() {
        return Ok(PlanarInput::Radial(radial_density(spec, radial_grid(cfg)?)?));
    }
    let grid = Arc::new(CartesianGrid::new(cfg.cartesian_n, cfg.cartesian_half_width)?);
    Ok(PlanarInput::Cartesian(
        PlanarDensity::from_fn(grid, planar_fn(spec))?.normalized()?,
    ))
}

/// Random field with real harmonic coefficients uniform in
/// `[-amplitude, amplitude] / (2l + 1)` for `1 <= l <= L`.
pub fn band_limited_random(grid: Arc<SphereGrid>, seed: u64, l: usize, amplitude: f64) -> Result<SphereField> {
    if l > grid.lmax() {
        return Err(Error::new(
            ErrorKind::Parameter,
            MODULE,
            format!("band limit {l} exceeds the sphere grid degree {}", grid.lmax()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = ShCoeffs::zeros(grid.lmax());
    for deg in 1..=l {
        for m in -(deg as i64)..=deg as i64 {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            c.set(deg, m, amplitude * x / (2 * deg + 1) as f64);
        }
    }
    Ok(SphereField::from_coeffs(grid, &c))
}

pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Log-density field `u` of a sphere-field spec.
pub fn sphere_field(spec: &InputSpec, grid: Arc<SphereGrid>, run_seed: u64) -> Result<SphereField> {
    match spec {
        InputSpec::SphereOptimizer { t, theta, phi } => {
            let p = ConformalParams::new(*t, unit_vector(*theta, *phi))?;
            Ok(sphere_optimizer(&p, grid))
        }
        InputSpec::BandLimitedRandom { seed, l, amplitude } => {
            band_limited_random(grid, seed.unwrap_or(run_seed), *l, *amplitude)
        }
        _ => Err(wrong_domain(spec, "a sphere field")),
    }
}

/// `f = rho - 1` with `int f = 0`, where `rho` is the density the input describes:
/// `e^u / int e^u` for fields, the Legendre sum for densities.
pub fn sphere_density(spec: &InputSpec, grid: Arc<SphereGrid>, run_seed: u64) -> Result<SphereField> {
    let f = match spec {
        InputSpec::Legendre { coeffs } => SphereField::from_zonal(grid, |z| zonal_eval(coeffs, z) - 1.0),
        _ => {
            let u = sphere_field(spec, grid, run_seed)?;
            let l = u.log_exp_integral();
            u.map(|v| (v - l).exp() - 1.0)
        }
    };
    let m = f.integral();
    Ok(f.map(|v| v - m))
}

pub fn heat_state(spec: &InputSpec) -> Result<HeatState> {
    match spec {
        InputSpec::Legendre { coeffs } => HeatState::new(coeffs.clone()),
        _ => Err(wrong_domain(spec, "the heat flow")),
    }
}

/// Normalized circle field (`int e^u = 1`).
pub fn circle_field(spec: &InputSpec, modes: usize) -> Result<CircleField> {
    let InputSpec::CirclePoisson { r, alpha, eps, k } = spec else {
        return Err(wrong_domain(spec, "a circle field"));
    };
    let base = circle_optimizer(&CircleParams::new(*r, *alpha)?, modes.max(*k));
    let mut c = base.coeffs().to_vec();
    c[*k].re += 0.5 * eps;
    let u = CircleField::new(c)?;
    let grid = CircleGrid::new(default_circle_nodes(&u))?;
    Ok(u.shifted(-log_exp_integral(&u, &grid)))
}

/// Keller-Segel initial density `8 pi rho` on the flow grid.
pub fn ks_density(spec: &InputSpec, cfg: &RunConfig) -> Result<RadialDensity> {
    let InputSpec::CriticalMass(inner) = spec else {
        return Err(Error::new(
            ErrorKind::Parameter,
            MODULE,
            format!("Keller-Segel data are written 8pi*<planar spec>, got {spec}"),
        ));
    };
    let rho = radial_density(inner, ks_grid(cfg)?)?;
    rho.scaled(8.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> InputSpec {
        InputSpec::parse(s).unwrap()
    }

    #[test]
    fn perturbed_mass_closed_forms() {
        // h_1 lifts to the uniform density, so every mode integrates to zero
        assert!((perturbed_mass(1.0, 0.3, 2) - 1.0).abs() < 1e-14);
        assert!((perturbed_mass(2.5, 0.0, 1) - 1.0).abs() < 1e-13);
        // against quadrature in r
        let s: f64 = 2.0;
        let g = make_radial_grid(1e6, 8192, RadialScheme::LogUniform).unwrap();
        let p = PlanarOptimizerParams::new(s, [0.0, 0.0]).unwrap();
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| planar_optimizer_value(&p, [r, 0.0]) * (1.0 + 0.5 * height(r)))
            .collect();
        let m = crate::grids::integrate(&vals, &g).unwrap();
        assert!((perturbed_mass(s, 0.5, 1) - m).abs() < 1e-8, "{m}");
    }

    #[test]
    fn planar_specs_have_unit_mass() {
        let cfg = RunConfig::default();
        for s in [
            "gaussian:sigma=0.5",
            "optimizer:s=2",
            "perturbed-optimizer:s=3,eps=0.4,mode=2",
            "mixture:weights=1;3,components=gaussian(sigma=2);perturbed-optimizer(s=0.5,eps=-0.3,mode=1)",
        ] {
            let rho = planar_input(&spec(s), &cfg).unwrap();
            assert!((rho.mass() - 1.0).abs() < 1e-8, "{s}: {}", rho.mass());
        }
        let off = planar_input(&spec("optimizer:s=1,x=1,y=-1"), &cfg).unwrap();
        assert!(matches!(off, PlanarInput::Cartesian(_)));
        assert!(radial_density(&spec("optimizer:x=1"), radial_grid(&cfg).unwrap()).is_err());
    }

    #[test]
    fn wrong_domain_is_a_parameter_error() {
        let cfg = RunConfig::default();
        let e = planar_input(&spec("circle-poisson"), &cfg).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Parameter);
        assert!(heat_state(&spec("gaussian")).is_err());
        assert!(ks_density(&spec("gaussian"), &cfg).is_err());
        assert!(circle_field(&spec("1+0.5*P1"), 32).is_err());
    }

    #[test]
    fn sphere_and_circle_fields() {
        let grid = Arc::new(SphereGrid::new(24, 49).unwrap());
        let a = sphere_field(&spec("band-limited-random:l=3"), grid.clone(), 5).unwrap();
        let b = sphere_field(&spec("band-limited-random:seed=5,l=3"), grid.clone(), 0).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.integral().abs() < 1e-12);
        assert!(sphere_field(&spec("band-limited-random:l=30"), grid.clone(), 0).is_err());
        let f = sphere_density(&spec("1+0.5*P1"), grid.clone(), 0).unwrap();
        assert!(f.integral().abs() < 1e-15);
        let f = sphere_density(&spec("sphere-optimizer:t=1,theta=0.5"), grid, 0).unwrap();
        assert!(f.integral().abs() < 1e-15);
        let u = circle_field(&spec("circle-poisson:r=0.5,eps=0.2,k=3"), 64).unwrap();
        let g = CircleGrid::new(default_circle_nodes(&u)).unwrap();
        assert!(log_exp_integral(&u, &g).abs() < 1e-14);
    }

    #[test]
    fn ks_data_have_critical_mass() {
        let cfg = RunConfig::default();
        let rho = ks_density(&spec("8pi*optimizer:s=1"), &cfg).unwrap();
        assert!((rho.mass() - 8.0 * PI).abs() < 1e-6);
    }
}
