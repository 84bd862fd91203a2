//! The acceptance matrix: twelve criteria, each returning its metrics and a
//! pass flag. Criteria run on separate threads; results keep criterion order.

use super::commands::{ks_run, stability_config};
use super::config::RunConfig;
use super::inputs::{band_limited_random, circle_field, planar_input, radial_density, radial_grid, sphere_grid};
use super::spec::InputSpec;
use crate::entropy::{
    half_convexity_gap, log_partition, pinsker_gap, relative_entropy, small_set_delta, strong_young_gap, FiniteSpace,
    Potential, ProbabilityDensity,
};
use crate::error::Result;
use crate::flows::{decay_check, dissipation_check, heat_evolve, HeatState};
use crate::functionals::sphere::{green_eigenvalues, spherical_free_energy};
use crate::functionals::sphere_green_apply;
use crate::functionals::{lebedev_milin_parts, onofri_functional, planar_free_energy, PlanarInput, SphereField};
use crate::geometry::{lift_t_radial, CircleParams, ConformalParams};
use crate::grids::{CartesianGrid, SphereGrid};
use crate::optimizers::{
    circle_optimizer, planar_optimizer_cartesian, planar_optimizer_radial, recenter, sphere_optimizer,
    PlanarOptimizerParams,
};
use crate::stability::{
    circle_stability_certificate, onofri_stability_certificates, planar_stability_certificate, quadratic_pair,
    toy_duality_demo,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "planar equality cases"),
    (2, "Gaussian free energy"),
    (3, "planar stability family"),
    (4, "Onofri values"),
    (5, "Onofri stability"),
    (6, "entropy inequalities"),
    (7, "duality demonstrator"),
    (8, "Green operator"),
    (9, "heat flow"),
    (10, "plane-to-sphere transfer"),
    (11, "Keller-Segel"),
    (12, "circle"),
];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub config: RunConfig,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

impl SuiteSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Fixed-width table, one row per criterion.
    pub fn table(&self) -> String {
        let mut out = format!("{:>3}  {:<28}  {:<4}  {}\n", "id", "criterion", "", "detail");
        for c in &self.criteria {
            out.push_str(&format!(
                "{:>3}  {:<28}  {:<4}  {}\n",
                c.id,
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        out.push_str(&format!("{} passed, {} failed\n", self.passed, self.failed));
        out
    }
}

/// Metrics plus the list of violated requirements.
#[derive(Default)]
struct Check {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Check {
    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    /// Record `v` and require `v <= limit`.
    fn at_most(&mut self, name: &str, v: f64, limit: f64) {
        self.metric(name, v);
        if !(v <= limit) {
            self.failures.push(format!("{name} = {v:e} exceeds {limit:e}"));
        }
    }

    fn at_least(&mut self, name: &str, v: f64, limit: f64) {
        self.metric(name, v);
        if !(v >= limit) {
            self.failures.push(format!("{name} = {v:e} below {limit:e}"));
        }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

/// Keep the larger value under `name`.
fn track_max(c: &mut Check, name: &str, v: f64) {
    let e = c.metrics.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
    *e = e.max(v);
}

fn track_min(c: &mut Check, name: &str, v: f64) {
    let e = c.metrics.entry(name.to_string()).or_insert(f64::INFINITY);
    *e = e.min(v);
}

pub fn run_criterion(id: usize, cfg: &RunConfig) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let mut c = Check::default();
    let outcome = match id {
        1 => planar_equality(cfg, &mut c),
        2 => gaussian_value(cfg, &mut c),
        3 => planar_certificates(cfg, &mut c),
        4 => onofri_values(cfg, &mut c),
        5 => onofri_stability(cfg, &mut c),
        6 => entropy_suite(cfg, &mut c),
        7 => duality(&mut c),
        8 => green(cfg, &mut c),
        9 => heat(cfg, &mut c),
        10 => transfer(cfg, &mut c),
        11 => keller_segel(cfg, &mut c),
        12 => circle(cfg, &mut c),
        _ => {
            c.failures.push(format!("no criterion {id}"));
            Ok(())
        }
    };
    if let Err(e) = outcome {
        c.failures.push(e.to_string());
    }
    let pass = c.failures.is_empty();
    let detail = if pass {
        c.metrics
            .iter()
            .take(3)
            .map(|(k, v)| format!("{k}={v:.3e}"))
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        c.failures.join("; ")
    };
    CriterionResult {
        id,
        name,
        pass,
        detail,
        metrics: c.metrics,
    }
}

/// Run `ids` (all criteria when empty) concurrently, reporting in id order.
pub fn run_suite(cfg: &RunConfig, ids: &[usize]) -> SuiteSummary {
    let ids: Vec<usize> = if ids.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        ids.to_vec()
    };
    let criteria: Vec<CriterionResult> = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|&id| s.spawn(move || run_criterion(id, cfg))).collect();
        handles
            .into_iter()
            .zip(&ids)
            .map(|(h, &id)| {
                h.join().unwrap_or_else(|_| CriterionResult {
                    id,
                    name: "panicked",
                    pass: false,
                    detail: "criterion panicked".into(),
                    metrics: BTreeMap::new(),
                })
            })
            .collect()
    });
    let passed = criteria.iter().filter(|c| c.pass).count();
    SuiteSummary {
        config: cfg.clone(),
        failed: criteria.len() - passed,
        pass: passed == criteria.len(),
        passed,
        criteria,
    }
}

fn spec(s: &str) -> InputSpec {
    InputSpec::parse(s).expect("suite specs are valid")
}

fn planar_equality(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let g = radial_grid(cfg)?;
    for s in [0.5, 1.0, 2.0] {
        let h = planar_optimizer_radial(s, g.clone())?;
        let f = planar_free_energy(&PlanarInput::Radial(h))?;
        c.at_most(&format!("radial_abs_s{s}"), f.abs(), 1e-6);
    }
    let grid = Arc::new(CartesianGrid::new(cfg.cartesian_n, cfg.cartesian_half_width)?);
    let p = PlanarOptimizerParams::new(1.0, [1.0, -1.0])?;
    let h = planar_optimizer_cartesian(&p, grid)?.normalized()?;
    let f = planar_free_energy(&PlanarInput::Cartesian(h))?;
    c.at_most("cartesian_abs", f.abs(), 1e-3);
    Ok(())
}

fn gaussian_value(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let g = radial_grid(cfg)?;
    let target = 2f64.ln() - EULER_GAMMA;
    let mut vals = Vec::new();
    for sigma in [0.5, 1.0, 2.0] {
        let rho = radial_density(&InputSpec::Gaussian { sigma }, g.clone())?;
        let f = planar_free_energy(&PlanarInput::Radial(rho))?;
        c.at_most(&format!("error_sigma{sigma}"), (f - target).abs(), 1e-4);
        vals.push(f);
    }
    let spread =
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    c.at_most("sigma_spread", spread, 1e-5);
    Ok(())
}

/// Gaussians, optimizer mixtures and perturbed optimizers.
pub fn planar_family() -> Vec<InputSpec> {
    let mut out: Vec<InputSpec> = [
        "gaussian:sigma=0.5",
        "gaussian:sigma=1",
        "gaussian:sigma=2",
        "mixture:weights=0.5;0.5,components=optimizer(s=1);optimizer(s=3)",
        "mixture:weights=0.5;0.5,components=optimizer(s=0.5);optimizer(s=2)",
        "mixture:weights=0.3;0.7,components=optimizer(s=1);gaussian(sigma=1)",
    ]
    .iter()
    .map(|s| spec(s))
    .collect();
    for eps in [0.1, 0.3] {
        for mode in 1..=3 {
            out.push(InputSpec::PerturbedOptimizer { s: 1.0, eps, mode });
        }
    }
    out
}

fn planar_certificates(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let sc = stability_config(cfg);
    let family = planar_family();
    c.metric("cases", family.len() as f64);
    for s in &family {
        let cert = planar_stability_certificate(&planar_input(s, cfg)?, &sc)?;
        track_min(c, "min_gap", cert.gap);
        track_min(c, "min_value", cert.value);
        c.require(cert.gap >= -1e-6, format!("{s}: gap {:e}", cert.gap));
    }
    Ok(())
}

fn onofri_values(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let grid = sphere_grid(cfg)?;
    let n = [0.48, -0.6, 0.64];
    for t in [0.0, 0.5, 1.0, 2.0] {
        let u = sphere_optimizer(&ConformalParams::new(t, n)?, grid.clone());
        track_max(c, "max_abs_optimizer", onofri_functional(&u).abs());
    }
    let worst = c.metrics["max_abs_optimizer"];
    c.at_most("max_abs_optimizer", worst, 1e-6);
    for i in 0..100u64 {
        let u = band_limited_random(grid.clone(), cfg.seed.wrapping_add(i), 6, 1.0)?;
        track_min(c, "min_random", onofri_functional(&u));
    }
    let low = c.metrics["min_random"];
    c.at_least("min_random", low, -1e-8);
    let u = sphere_optimizer(&ConformalParams::new(1.0, [0.0, 0.0, 1.0])?, grid);
    c.at_most("mean_error_t1", (u.integral() + 0.626063).abs(), 1e-5);
    Ok(())
}

/// Seeded, normalized band-limited fields with a random tilt.
pub fn onofri_test_fields(grid: Arc<SphereGrid>, seed: u64, count: usize) -> Result<Vec<SphereField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let base = band_limited_random(grid.clone(), seed.wrapping_add(1000 + i as u64), 4, 1.0)?;
        let tilt = [
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        ];
        let u = base.zip_with(
            &SphereField::from_fn(grid.clone(), |w| tilt[0] * w[0] + tilt[1] * w[1] + tilt[2] * w[2]),
            |a, b| a + b,
        )?;
        let l = u.log_exp_integral();
        out.push(u.map(|v| v - l));
    }
    Ok(out)
}

fn onofri_stability(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let sc = stability_config(cfg);
    let fields = onofri_test_fields(sphere_grid(cfg)?, cfg.seed, 20)?;
    for (i, u) in fields.iter().enumerate() {
        let rc = recenter(u, 1e-10, 50)?;
        track_max(c, "max_barycenter", rc.barycenter_norm);
        track_max(c, "max_iterations", rc.iterations as f64);
        c.require(
            rc.barycenter_norm <= 1e-10 && rc.iterations <= 50,
            format!("field {i}: recenter"),
        );
        for cert in onofri_stability_certificates(&rc.field, &sc)? {
            track_min(c, "min_gap", cert.gap);
            c.require(cert.pass, format!("field {i}: {} gap {:e}", cert.inequality, cert.gap));
        }
    }
    Ok(())
}

/// Random probability density against `nu`.
fn random_density(rng: &mut ChaCha8Rng, nu: &[f64]) -> Result<ProbabilityDensity> {
    let raw: Vec<f64> = nu.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
    let m: f64 = raw.iter().zip(nu).map(|(a, b)| a * b).sum();
    ProbabilityDensity::with_weights(nu, raw.iter().map(|v| v / m).collect())
}

fn random_space(rng: &mut ChaCha8Rng) -> Result<FiniteSpace> {
    let n = rng.gen_range(1..=8);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let t: f64 = raw.iter().sum();
    FiniteSpace::new(raw.iter().map(|w| w / t).collect())
}

fn entropy_suite(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..1000 {
        let sp = random_space(&mut rng)?;
        let p = random_density(&mut rng, sp.nu())?;
        let q = random_density(&mut rng, sp.nu())?;
        track_min(c, "min_pinsker_gap", pinsker_gap(&p, &q)?);
        track_min(c, "min_half_convexity_gap", half_convexity_gap(&p, &q)?);
        let phi = Potential::new(sp.nu().iter().map(|_| rng.gen_range(-3.0..3.0)).collect())?;
        track_min(c, "min_strong_young_gap", strong_young_gap(&p, &phi)?);
    }
    for k in ["min_pinsker_gap", "min_half_convexity_gap", "min_strong_young_gap"] {
        let v = c.metrics[k];
        c.at_least(k, v, -1e-12);
    }

    // two-point space, rho = (3/2, 1/2), phi = (log 2, 0)
    let sp = FiniteSpace::new(vec![0.5, 0.5])?;
    let p = ProbabilityDensity::new(&sp, vec![1.5, 0.5])?;
    let one = ProbabilityDensity::uniform(&sp);
    let h = relative_entropy(&p, &one)?;
    let h_exact = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    c.at_most("worked_entropy_error", (h - h_exact).abs(), 1e-9);
    c.at_most("worked_entropy_vs_table", (h - 0.130812).abs(), 1e-6);
    let pg = pinsker_gap(&p, &one)?;
    c.at_most("worked_pinsker_gap_error", (pg - (h_exact - 0.125)).abs(), 1e-9);
    c.at_most("worked_pinsker_gap_vs_table", (pg - 0.005812).abs(), 1e-6);
    let phi = Potential::new(vec![2f64.ln(), 0.0])?;
    let sy = strong_young_gap(&one, &phi)?;
    let sy_exact = 1.5f64.ln() - 0.5 * 2f64.ln() - 0.5 / 9.0;
    c.at_most("worked_strong_young_error", (sy - sy_exact).abs(), 1e-9);
    c.at_most("worked_strong_young_vs_table", (sy - 0.003335).abs(), 1e-6);
    c.metric("worked_log_partition", log_partition(&sp, &phi)?);

    // small sets: rho0(A) <= delta implies rho1(A) <= eps whenever H(rho1|rho0) <= H
    let mut violations = 0usize;
    let mut checked = 0usize;
    while checked < 1000 {
        let sp = random_space(&mut rng)?;
        let p = random_density(&mut rng, sp.nu())?;
        let q = random_density(&mut rng, sp.nu())?;
        let eps = rng.gen_range(0.05..1.0);
        let h = relative_entropy(&p, &q)?;
        if !(h > 0.0) {
            continue;
        }
        checked += 1;
        let d = small_set_delta(eps, h)?;
        let n = sp.len();
        for mask in 1u32..(1 << n) {
            let mass = |v: &[f64]| {
                (0..n)
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| v[k] * sp.nu()[k])
                    .sum::<f64>()
            };
            if mass(q.values()) <= d.delta && mass(p.values()) > eps + 1e-12 {
                violations += 1;
            }
        }
    }
    c.metric("small_set_cases", checked as f64);
    c.at_most("small_set_violations", violations as f64, 0.0);
    Ok(())
}

fn duality(c: &mut Check) -> Result<()> {
    let spec = quadratic_pair(&[1.0], &[2.0])?;
    let r = toy_duality_demo(&spec)?;
    c.at_most("e_star_error", r.e_star_error.unwrap_or(f64::INFINITY), spec.slack);
    c.at_most("f_star_error", r.f_star_error.unwrap_or(f64::INFINITY), spec.slack);
    c.metric("lambda_mu_over_2", 0.5 * spec.lambda * r.mu);
    c.at_most(
        "transfer_coefficient_error",
        (0.5 * spec.lambda * r.mu - 0.125).abs(),
        1e-12,
    );
    c.at_least("bound_margin_min", r.bound_margin_min, -spec.slack);
    c.at_most("bound_margin_max_abs", r.bound_margin_max.abs(), spec.slack);
    c.at_most("lipschitz_excess", r.lipschitz_excess, r.lipschitz_slack);
    c.require(r.pass, "duality report did not pass");
    Ok(())
}

fn green(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let grid = sphere_grid(cfg)?;
    let eig = green_eigenvalues(3);
    type Harmonic = fn([f64; 3]) -> f64;
    let fields: [(usize, Harmonic); 6] = [
        (1, |w| w[2]),
        (1, |w| w[0] - 0.5 * w[1]),
        (2, |w| 1.5 * w[2] * w[2] - 0.5),
        (2, |w| w[0] * w[1]),
        (3, |w| 2.5 * w[2].powi(3) - 1.5 * w[2]),
        (3, |w| w[0] * (w[0] * w[0] - 3.0 * w[1] * w[1])),
    ];
    for (l, f) in fields {
        let lam = 1.0 / (l * (l + 1)) as f64;
        let u = SphereField::from_fn(grid.clone(), f);
        let gu = sphere_green_apply(&u)?;
        let scale = u.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = gu
            .values()
            .iter()
            .zip(u.values())
            .map(|(g, v)| (g - lam * v).abs())
            .fold(0.0, f64::max)
            / scale;
        track_max(c, &format!("relative_error_l{l}"), err);
        track_max(c, "eigenvalue_error", (eig[l] - lam).abs());
    }
    for l in 1..=3 {
        let k = format!("relative_error_l{l}");
        let v = c.metrics[&k];
        c.at_most(&k, v, 1e-4);
    }
    let v = c.metrics["eigenvalue_error"];
    c.at_most("eigenvalue_error", v, 1e-4);
    Ok(())
}

fn heat(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let rho0 = HeatState::new(vec![1.0, 0.5])?;
    let h0 = rho0.entropy()?;
    c.metric("initial_entropy", h0);
    c.at_most("initial_entropy_error", (h0 - 0.045229).abs(), 1e-6);
    let times = [0.1, 0.25, 0.5, 1.0];
    let decay = decay_check(&rho0, &times)?;
    for row in &decay.rows {
        c.at_least(&format!("decay_margin_t{}", row.t), row.bound + 1e-8 - row.entropy, 0.0);
    }
    if let Some(r) = decay.rows.iter().find(|r| r.t == 0.5) {
        c.metric("entropy_t0.5", r.entropy);
        c.metric("bound_t0.5", r.bound);
    }
    for t in [0.0, 0.1, 0.25, 0.5, 1.0] {
        let d = dissipation_check(&heat_evolve(&rho0, t)?, cfg.heat_dt)?;
        track_max(c, "max_dissipation_residual", d.residual);
    }
    let v = c.metrics["max_dissipation_residual"];
    c.at_most("max_dissipation_residual", v, 1e-4);
    Ok(())
}

/// Smooth unit-mass radial densities for the transfer identity.
pub fn transfer_family() -> Vec<InputSpec> {
    [
        "gaussian:sigma=1",
        "perturbed-optimizer:s=1,eps=0.3,mode=2",
        "perturbed-optimizer:s=2,eps=0.2,mode=1",
        "mixture:weights=0.5;0.5,components=gaussian(sigma=0.5);optimizer(s=2)",
        "mixture:weights=0.3;0.7,components=optimizer(s=0.5);gaussian(sigma=2)",
    ]
    .iter()
    .map(|s| spec(s))
    .collect()
}

fn transfer(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let rg = radial_grid(cfg)?;
    let sg = Arc::new(SphereGrid::axisymmetric(cfg.lift_nz)?);
    for s in transfer_family() {
        let rho = radial_density(&s, rg.clone())?;
        let planar = planar_free_energy(&PlanarInput::Radial(rho.clone()))?;
        let lifted = lift_t_radial(&rho, sg.clone());
        let m = lifted.integral();
        let f = lifted.map(|v| v / m - 1.0);
        let sphere = spherical_free_energy(&f)?;
        track_max(c, "max_abs_difference", (sphere - planar).abs());
        track_max(c, "max_lift_mass_error", (m - 1.0).abs());
    }
    let v = c.metrics["max_abs_difference"];
    c.at_most("max_abs_difference", v, 1e-3);
    Ok(())
}

fn keller_segel(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    let stat = ks_run(&spec("8pi*optimizer:s=1"), cfg, 10.0, 12)?;
    c.at_most(
        "stationary_drift_l1",
        stat.diagnostic_f64("max_drift_l1").unwrap_or(f64::INFINITY),
        1e-4,
    );
    let run = ks_run(&spec("8pi*gaussian:sigma=1"), cfg, cfg.ks_t_end, cfg.ks_samples)?;
    let get = |k: &str| run.diagnostic_f64(k).unwrap_or(f64::NAN);
    c.at_most("max_mass_error", get("max_mass_error"), 1e-6);
    c.at_most("max_free_energy_increase", get("max_free_energy_increase"), 1e-8);
    c.at_least("bound_margin_min", get("bound_margin_min"), 0.0);
    c.metric("t_end", run.times.last().copied().unwrap_or(0.0));
    let fit = run.diagnostics.get("rate_fit");
    let flag = |k: &str| fit.and_then(|f| f.get(k)).and_then(|v| v.as_bool()) == Some(true);
    let num = |k: &str| fit.and_then(|f| f.get(k)).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
    c.metric("free_energy_envelope_ratio", num("free_energy_envelope_ratio"));
    c.metric("distance_envelope_ratio", num("distance_envelope_ratio"));
    c.metric("free_energy_slope", num("free_energy_slope"));
    c.metric("distance_slope", num("distance_slope"));
    c.require(flag("free_energy_envelope_ok"), "free-energy t^-1/8 envelope flag");
    c.require(flag("distance_envelope_ok"), "distance t^-1/16 envelope flag");
    c.require(
        run.diagnostic_bool("cumulative_monotone") == Some(true),
        "cumulative mass not monotone",
    );
    Ok(())
}

fn circle(cfg: &RunConfig, c: &mut Check) -> Result<()> {
    for r in [0.2, 0.5, 0.8] {
        let u = circle_optimizer(&CircleParams::new(r, 0.4)?, cfg.circle_modes);
        let p = lebedev_milin_parts(&u);
        track_max(c, "max_abs_poisson", p.value.abs());
        if r == 0.5 {
            c.at_most("energy_error_r0.5", (p.energy - 0.575364).abs(), 1e-6);
        }
    }
    let v = c.metrics["max_abs_poisson"];
    c.at_most("max_abs_poisson", v, 1e-8);
    let sc = stability_config(cfg);
    let mut k = 0;
    for r in [0.0, 0.3, 0.6] {
        for (eps, mode) in [(0.2, 1), (0.3, 2), (-0.25, 3), (0.5, 1)] {
            if k == 10 {
                break;
            }
            k += 1;
            let u = circle_field(
                &InputSpec::CirclePoisson {
                    r,
                    alpha: 0.7,
                    eps,
                    k: mode,
                },
                cfg.circle_modes,
            )?;
            let cert = circle_stability_certificate(&u, &sc)?;
            track_min(c, "min_gap", cert.gap);
            c.require(
                cert.pass,
                format!("r = {r}, eps = {eps}, k = {mode}: gap {:e}", cert.gap),
            );
        }
    }
    c.metric("perturbed_cases", k as f64);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(99, &RunConfig::default());
        assert!(!r.pass);
    }

    #[test]
    fn family_sizes() {
        assert_eq!(planar_family().len(), 12);
        assert_eq!(transfer_family().len(), 5);
        assert!(transfer_family().iter().all(|s| s.is_radial()));
    }

    #[test]
    fn cheap_criteria_pass() {
        let cfg = RunConfig::default();
        let s = run_suite(&cfg, &[6, 7, 9, 12]);
        assert!(s.pass, "{}", s.table());
        assert_eq!(s.criteria.iter().map(|c| c.id).collect::<Vec<_>>(), vec![6, 7, 9, 12]);
    }
}
