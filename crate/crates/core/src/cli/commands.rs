//! The computations behind each subcommand, returning serializable reports.

use super::config::RunConfig;
use super::inputs::{circle_field, heat_state, ks_density, planar_input, sphere_density, sphere_field, sphere_grid};
use super::spec::{Domain, InputSpec};
use crate::error::{Error, ErrorKind, Result};
use crate::flows::{
    decay_check, dissipation_check, heat_evolve, heat_trajectory, ks_evolve, ks_rate_fit, FlowTrajectory, KsConfig,
};
use crate::functionals::sphere::spherical_free_energy_parts;
use crate::functionals::{lebedev_milin_parts, onofri_parts, planar_free_energy_parts, PlanarInput};
use crate::optimizers::{barycenter, recenter, PlanarSearchConfig};
use crate::stability::{
    circle_stability_certificate, constrained_onofri_gap, onofri_stability_certificates, planar_stability_certificate,
    quadratic_pair, spherical_stability_certificate, toy_duality_demo, DualityReport, StabilityCertificate,
    StabilityConfig,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

const MODULE: &str = "cli";

pub fn stability_config(cfg: &RunConfig) -> StabilityConfig {
    StabilityConfig {
        abs_tol: cfg.tol,
        rel_tol: cfg.rel_tol,
        oracle: cfg.oracle,
        planar_search: planar_search(cfg),
    }
}

pub fn planar_search(cfg: &RunConfig) -> PlanarSearchConfig {
    PlanarSearchConfig {
        log_s_min: cfg.log_s_min,
        log_s_max: cfg.log_s_max,
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub command: &'static str,
    pub spec: String,
    pub domain: &'static str,
    pub values: BTreeMap<String, f64>,
    pub grid: Value,
    pub metadata: BTreeMap<String, Value>,
}

fn seed_metadata(spec: &InputSpec, cfg: &RunConfig, meta: &mut BTreeMap<String, Value>) {
    if let InputSpec::BandLimitedRandom { seed, .. } = spec {
        meta.insert("seed".into(), json!(seed.unwrap_or(cfg.seed)));
    }
}

fn planar_values(
    rho: &PlanarInput,
    prefix: &str,
    values: &mut BTreeMap<String, f64>,
    meta: &mut BTreeMap<String, Value>,
) -> Result<()> {
    let p = planar_free_energy_parts(rho)?;
    values.insert(format!("{prefix}entropy"), p.entropy);
    values.insert(format!("{prefix}interaction"), p.interaction);
    values.insert(format!("{prefix}free_energy"), p.free_energy);
    values.insert(format!("{prefix}mass"), rho.mass());
    if let PlanarInput::Radial(r) = rho {
        if let Some(t) = r.divergent_log_moment() {
            meta.insert("log_moment_warning".into(), json!(t));
        }
    }
    Ok(())
}

/// All functional values that apply to the input's domain.
pub fn cmd_eval(spec: &InputSpec, cfg: &RunConfig) -> Result<FunctionalReport> {
    let mut values = BTreeMap::new();
    let mut metadata = BTreeMap::new();
    seed_metadata(spec, cfg, &mut metadata);
    let grid = match spec.domain() {
        Domain::Planar => {
            let rho = planar_input(spec, cfg)?;
            planar_values(&rho, "", &mut values, &mut metadata)?;
            rho.grid_summary()
        }
        Domain::KellerSegel => {
            let InputSpec::CriticalMass(inner) = spec else {
                unreachable!()
            };
            let rho = planar_input(inner, cfg)?;
            planar_values(&rho, "normalized_", &mut values, &mut metadata)?;
            values.insert("mass".into(), 8.0 * std::f64::consts::PI * rho.mass());
            rho.grid_summary()
        }
        Domain::SphereField => {
            let g = sphere_grid(cfg)?;
            let u = sphere_field(spec, g.clone(), cfg.seed)?;
            let o = onofri_parts(&u);
            values.insert("onofri".into(), o.value);
            values.insert("dirichlet".into(), o.dirichlet);
            values.insert("mean".into(), o.mean);
            values.insert("log_exp_integral".into(), o.log_exp_integral);
            let l = u.log_exp_integral();
            let b = barycenter(&u.map(|v| v - l));
            values.insert(
                "barycenter_norm".into(),
                (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt(),
            );
            let f = sphere_density(spec, g.clone(), cfg.seed)?;
            let p = spherical_free_energy_parts(&f)?;
            values.insert("density_entropy".into(), p.entropy);
            values.insert("density_interaction".into(), p.interaction);
            values.insert("density_free_energy".into(), p.free_energy);
            g.summary()
        }
        Domain::SphereDensity => {
            let g = sphere_grid(cfg)?;
            let f = sphere_density(spec, g.clone(), cfg.seed)?;
            let p = spherical_free_energy_parts(&f)?;
            values.insert("entropy".into(), p.entropy);
            values.insert("interaction".into(), p.interaction);
            values.insert("free_energy".into(), p.free_energy);
            let h = heat_state(spec)?;
            values.insert("relative_entropy_of_uniform".into(), h.entropy()?);
            values.insert("fisher_information".into(), h.fisher()?);
            g.summary()
        }
        Domain::Circle => {
            let u = circle_field(spec, cfg.circle_modes)?;
            let p = lebedev_milin_parts(&u);
            values.insert("lebedev_milin".into(), p.value);
            values.insert("energy".into(), p.energy);
            values.insert("mean".into(), p.mean);
            values.insert("log_exp_integral".into(), p.log_exp_integral);
            json!({"kind": "circle", "modes": u.max_mode()})
        }
    };
    Ok(FunctionalReport {
        command: "eval",
        spec: spec.to_string(),
        domain: spec.domain().name(),
        values,
        grid,
        metadata,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub command: &'static str,
    pub spec: String,
    pub certificates: Vec<StabilityCertificate>,
    pub pass: bool,
}

/// The stability certificate for the input's domain: planar, spherical (for
/// sphere fields, on the density `e^u / int e^u`) or circle.
pub fn cmd_stability(spec: &InputSpec, cfg: &RunConfig) -> Result<StabilityReport> {
    let sc = stability_config(cfg);
    let cert = match spec.domain() {
        Domain::Planar => planar_stability_certificate(&planar_input(spec, cfg)?, &sc)?,
        Domain::KellerSegel => {
            let InputSpec::CriticalMass(inner) = spec else {
                unreachable!()
            };
            planar_stability_certificate(&planar_input(inner, cfg)?, &sc)?
        }
        Domain::SphereField | Domain::SphereDensity => {
            spherical_stability_certificate(&sphere_density(spec, sphere_grid(cfg)?, cfg.seed)?, &sc)?
        }
        Domain::Circle => circle_stability_certificate(&circle_field(spec, cfg.circle_modes)?, &sc)?,
    };
    Ok(StabilityReport {
        command: "stability",
        spec: spec.to_string(),
        pass: cert.pass,
        certificates: vec![cert],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnofriReport {
    pub command: &'static str,
    pub spec: String,
    pub onofri: f64,
    pub recenter_iterations: usize,
    pub barycenter_norm: f64,
    pub constrained_gap: f64,
    pub certificates: Vec<StabilityCertificate>,
    pub pass: bool,
}

/// Normalize `u`, recenter it, and run the three Onofri certificates.
pub fn cmd_onofri(spec: &InputSpec, cfg: &RunConfig) -> Result<OnofriReport> {
    if spec.domain() != Domain::SphereField {
        return Err(Error::new(
            ErrorKind::Parameter,
            MODULE,
            format!("onofri needs a sphere field (sphere-optimizer or band-limited-random), got {spec}"),
        ));
    }
    let u = sphere_field(spec, sphere_grid(cfg)?, cfg.seed)?;
    let l = u.log_exp_integral();
    let rc = recenter(&u.map(|v| v - l), cfg.recenter_tol, cfg.recenter_max_iter)?;
    let certs = onofri_stability_certificates(&rc.field, &stability_config(cfg))?;
    let gap = constrained_onofri_gap(&rc.field)?;
    let pass = certs.iter().all(|c| c.pass) && rc.barycenter_norm <= cfg.recenter_tol && gap >= -cfg.tol;
    Ok(OnofriReport {
        command: "onofri",
        spec: spec.to_string(),
        onofri: onofri_parts(&rc.field).value,
        recenter_iterations: rc.iterations,
        barycenter_norm: rc.barycenter_norm,
        constrained_gap: gap,
        certificates: certs.to_vec(),
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Heat,
    Ks,
}

/// Heat flow from a Legendre density or Keller-Segel from `8pi*<planar>`.
/// The trajectory's `pass` diagnostic reflects the invariants of the run.
pub fn cmd_flow(kind: FlowKind, spec: &InputSpec, cfg: &RunConfig) -> Result<FlowTrajectory> {
    match kind {
        FlowKind::Heat => heat_run(spec, cfg),
        FlowKind::Ks => ks_run(spec, cfg, cfg.ks_t_end, cfg.ks_samples),
    }
}

fn heat_run(spec: &InputSpec, cfg: &RunConfig) -> Result<FlowTrajectory> {
    let rho0 = heat_state(spec)?;
    let mut traj = heat_trajectory(&rho0, &cfg.heat_times)?;
    let decay = decay_check(&rho0, &cfg.heat_times)?;
    let mut diss = Vec::with_capacity(cfg.heat_times.len());
    for &t in &cfg.heat_times {
        diss.push(dissipation_check(&heat_evolve(&rho0, t)?, cfg.heat_dt)?);
    }
    let pass = traj.diagnostic_bool("pass") == Some(true) && decay.pass && diss.iter().all(|d| d.pass);
    traj.set("decay_check", &decay);
    traj.set("dissipation_checks", &diss);
    traj.set("dissipation_dt", cfg.heat_dt);
    traj.set("pass", pass);
    Ok(traj)
}

pub(crate) fn ks_run(spec: &InputSpec, cfg: &RunConfig, t_end: f64, samples: usize) -> Result<FlowTrajectory> {
    let rho0 = ks_density(spec, cfg)?;
    let kc = KsConfig {
        dt: cfg.ks_dt,
        t_end,
        samples,
        search: planar_search(cfg),
        ..Default::default()
    };
    let mut traj = ks_evolve(&rho0, &kc)?;
    let mut pass = traj.diagnostic_bool("free_energy_monotone") == Some(true)
        && traj.diagnostic_bool("cumulative_monotone") == Some(true)
        && traj.diagnostic_bool("bound_holds") == Some(true);
    match ks_rate_fit(&traj) {
        Ok(fit) => {
            // envelopes are only meaningful above the discretization floors
            if fit.free_energy_slope.is_some() {
                pass &= fit.free_energy_envelope_ok;
            }
            if fit.distance_slope.is_some() {
                pass &= fit.distance_envelope_ok;
            }
            traj.set("rate_fit", &fit);
        }
        Err(e) => traj.set("rate_fit_error", e.to_string()),
    }
    traj.set("spec", spec.to_string());
    traj.set("pass", pass);
    Ok(traj)
}

/// The 1D quadratic pair `E = a x^2 <= F = b x^2`, or its 2D/3D analogue
/// when more coefficients are given.
pub fn cmd_duality(a: &[f64], b: &[f64]) -> Result<DualityReport> {
    toy_duality_demo(&quadratic_pair(a, b)?)
}
