//! Acceptance matrix: runs the twelve criteria at their stated tolerances,
//! cross-checks the headline numbers against closed forms computed here, and
//! prints one PASS/FAIL line per criterion.

use loghls::cli::inputs::sphere_grid;
use loghls::cli::{cmd_eval, cmd_flow, run_suite, FlowKind, InputSpec, RunConfig};
use loghls::functionals::{sphere_green_apply, SphereField};
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn eval(spec: &str, key: &str) -> Result<f64, String> {
    let spec = InputSpec::parse(spec).map_err(|e| e.to_string())?;
    let r = cmd_eval(&spec, &RunConfig::default()).map_err(|e| e.to_string())?;
    r.values
        .get(key)
        .copied()
        .ok_or_else(|| format!("no {key} in eval report"))
}

fn within(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {got} vs {want} (tol {tol:e})"))
    }
}

/// `-(1/2) int_{-1}^{1} ln(1 + a z) dz`, the relative entropy of the uniform
/// measure with respect to `1 + a z`.
fn zonal_relative_entropy(a: f64) -> f64 {
    let anti = |w: f64| (w * w.ln() - w) / a;
    -0.5 * (anti(1.0 + a) - anti(1.0 - a))
}

/// Mean of the conformal factor `-2 ln(cosh t - sinh t z)` over the sphere.
fn optimizer_mean(t: f64) -> f64 {
    let (a, b) = (t.cosh(), t.sinh());
    let anti = |w: f64| (w * w.ln() - w) / b;
    // int_{-1}^{1} ln(a - b z) dz with w = a - b z
    let int = anti(a + b) - anti(a - b);
    -int
}

fn oracle_checks() -> BTreeMap<usize, Result<(), String>> {
    let mut out = BTreeMap::new();

    out.insert(
        1,
        (|| {
            for s in [0.5, 1.0, 2.0] {
                within(
                    &format!("F(h_{s})"),
                    eval(&format!("optimizer:s={s}"), "free_energy")?,
                    0.0,
                    1e-6,
                )?;
            }
            Ok(())
        })(),
    );

    out.insert(
        2,
        (|| {
            // |x - y|^2 is 4 sigma^2 Exp(1): E ln|x - y| = (ln(4 sigma^2) - gamma) / 2,
            // entropy -(1 + ln(2 pi sigma^2)), and F(h) = 0 fixes the constant 1 + ln pi
            for sigma in [0.5_f64, 1.0, 2.0] {
                let ent = -(1.0 + (2.0 * std::f64::consts::PI * sigma * sigma).ln());
                let inter = 0.5 * ((4.0 * sigma * sigma).ln() - EULER_GAMMA);
                let f = ent + 2.0 * inter + 1.0 + std::f64::consts::PI.ln();
                within(
                    "closed form vs ln 2 - gamma",
                    f,
                    std::f64::consts::LN_2 - EULER_GAMMA,
                    1e-12,
                )?;
                within(
                    &format!("F(gaussian sigma={sigma})"),
                    eval(&format!("gaussian:sigma={sigma}"), "free_energy")?,
                    f,
                    1e-4,
                )?;
            }
            Ok(())
        })(),
    );

    out.insert(
        4,
        (|| {
            within("closed-form mean at t=1", optimizer_mean(1.0), -0.626063, 1e-5)?;
            within(
                "mean of u_1",
                eval("sphere-optimizer:t=1", "mean")?,
                optimizer_mean(1.0),
                1e-5,
            )?;
            for t in [0.0, 0.5, 1.0, 2.0] {
                within(
                    &format!("J(u_{t})"),
                    eval(&format!("sphere-optimizer:t={t}"), "onofri")?,
                    0.0,
                    1e-6,
                )?;
            }
            Ok(())
        })(),
    );

    out.insert(
        7,
        (|| {
            // brute-force conjugates of x^2 and 2 x^2 on the demonstrator grid
            let pts: Vec<f64> = (0..401).map(|i| -3.0 + 6.0 * i as f64 / 400.0).collect();
            let conj = |c: f64, y: f64| pts.iter().map(|x| x * y - c * x * x).fold(f64::NEG_INFINITY, f64::max);
            for &y in &pts {
                within(&format!("E*({y})"), conj(1.0, y), y * y / 4.0, 2e-2)?;
                within(&format!("F*({y})"), conj(2.0, y), y * y / 8.0, 2e-2)?;
                if conj(2.0, y) > conj(1.0, y) + 1e-12 {
                    return Err(format!("F* > E* at y = {y}"));
                }
            }
            Ok(())
        })(),
    );

    out.insert(
        8,
        (|| {
            let grid = sphere_grid(&RunConfig::default()).map_err(|e| e.to_string())?;
            type Harmonic = fn([f64; 3]) -> f64;
            let cases: [(&str, Harmonic, f64); 3] = [
                ("z", |w| w[2], 2.0),
                ("xy", |w| w[0] * w[1], 6.0),
                ("z(5z^2-3)", |w| w[2] * (5.0 * w[2] * w[2] - 3.0), 12.0),
            ];
            for (name, f, ll) in cases {
                let u = SphereField::from_fn(grid.clone(), f);
                let g = sphere_green_apply(&u).map_err(|e| e.to_string())?;
                let scale = u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let err = g
                    .values()
                    .iter()
                    .zip(u.values())
                    .fold(0.0_f64, |m, (g, u)| m.max((g - u / ll).abs()));
                if err > 1e-4 * scale / ll {
                    return Err(format!("G({name}) deviates from {name}/{ll} by {err:e}"));
                }
            }
            Ok(())
        })(),
    );

    out.insert(
        9,
        (|| {
            let h0 = zonal_relative_entropy(0.5);
            within("closed-form H0", h0, 0.045229, 1e-6)?;
            within("H0", eval("1+0.5*P1", "relative_entropy_of_uniform")?, h0, 1e-6)?;
            // the degree-one mode decays like exp(-2t); the exact value at
            // t = 1/2 is 0.005697, under the e^-2 H0 = 0.006122 bound
            let h_half = zonal_relative_entropy(0.5 * (-1.0_f64).exp());
            let spec = InputSpec::parse("1+0.5*P1").map_err(|e| e.to_string())?;
            let traj = cmd_flow(FlowKind::Heat, &spec, &RunConfig::default()).map_err(|e| e.to_string())?;
            let i = traj
                .times
                .iter()
                .position(|&t| t == 0.5)
                .ok_or("no sample at t = 0.5")?;
            within("H(0.5)", traj.free_energy[i], h_half, 1e-6)?;
            if h_half > 0.006122 || h_half > (-2.0_f64).exp() * h0 {
                return Err(format!("H(0.5) = {h_half} exceeds the decay bound"));
            }
            Ok(())
        })(),
    );

    out.insert(
        12,
        (|| {
            // -2 ln|1 - r e^{i theta}| has cosine coefficients 2 r^k / k, so the
            // energy sum_k k a_k^2 / 2 is -2 ln(1 - r^2)
            within("closed-form energy r=0.5", -2.0 * (0.75_f64).ln(), 0.575364, 1e-6)?;
            for r in [0.2_f64, 0.5, 0.8] {
                let spec = format!("circle-poisson:r={r}");
                within(
                    &format!("energy r={r}"),
                    eval(&spec, "energy")?,
                    -2.0 * (1.0 - r * r).ln(),
                    1e-6,
                )?;
                within(&format!("LM r={r}"), eval(&spec, "lebedev_milin")?, 0.0, 1e-8)?;
            }
            Ok(())
        })(),
    );
    out
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (summary, oracles) = std::thread::scope(|s| {
        let suite = s.spawn(|| run_suite(&RunConfig::default(), &[]));
        let oracles = oracle_checks();
        (suite.join().expect("suite thread"), oracles)
    });
    let mut failed = 0;
    for c in &summary.criteria {
        let oracle = oracles.get(&c.id);
        let pass = c.pass && oracle.is_none_or(|o| o.is_ok());
        let mut detail = c.detail.clone();
        match oracle {
            Some(Ok(())) => detail.push_str("; closed forms agree"),
            Some(Err(e)) => detail = format!("closed-form check: {e}; {detail}"),
            None => {}
        }
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {}  {}",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            detail
        );
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        summary.criteria.len() - failed,
        summary.criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
