//! Command-line front end: argument parsing, configuration layering, report
//! output and exit codes (0 pass, 1 computation failure or failed check,
//! 2 invalid input).

pub mod commands;
pub mod config;
pub mod inputs;
pub mod spec;
pub mod suite;

pub use commands::{cmd_duality, cmd_eval, cmd_flow, cmd_onofri, cmd_stability, FlowKind};
pub use config::RunConfig;
pub use spec::InputSpec;
pub use suite::{run_suite, CriterionResult, SuiteSummary};

use crate::error::{Error, ErrorKind, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

const MODULE: &str = "cli";

#[derive(Debug, Parser)]
#[command(
    name = "loghls",
    version,
    about = "Log-HLS, Onofri and Lebedev-Milin functionals, stability certificates and flows"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Flat key = value configuration file, applied before the flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Radial grid nodes.
    #[arg(long = "grid-n", global = true, value_name = "N")]
    grid_n: Option<usize>,
    /// Outer radius of the radial grid.
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// Absolute certificate tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Also run the dense-grid distance oracles.
    #[arg(long, global = true)]
    oracle: bool,
    /// Seed for band-limited random fields without their own seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON reports and CSV trajectories.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Functional values of a density or field.
    Eval {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// Stability certificate for the input's domain.
    Stability {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// The three Onofri certificates on a recentered sphere field.
    Onofri {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// Run a flow and write its trajectory.
    Flow {
        #[command(subcommand)]
        kind: FlowCommand,
    },
    /// Same as `flow heat`.
    Heatflow {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// Same as `flow ks`.
    Ks {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// Brute-force Legendre duality on E = a x^2 <= F = b x^2.
    DualityDemo {
        #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2", allow_hyphen_values = true)]
        b: Vec<f64>,
    },
    /// The acceptance matrix.
    Suite {
        /// Run only these criteria (comma-separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum FlowCommand {
    /// Heat flow on S^2 from a Legendre density such as 1+0.5*P1.
    Heat {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
    /// Radial Keller-Segel from 8pi*<planar spec>.
    Ks {
        #[arg(allow_hyphen_values = true)]
        spec: String,
    },
}

/// Exit status for an error: invalid input (parse and parameter errors) is 2,
/// anything raised during computation is 1.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind {
        ErrorKind::Parse | ErrorKind::Parameter => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn build_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &g.config {
        cfg.apply_file(p)?;
    }
    if let Some(n) = g.grid_n {
        cfg.grid_n = n;
    }
    if let Some(r) = g.rmax {
        cfg.rmax = r;
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    if g.oracle {
        cfg.oracle = true;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| {
        Error::new(
            ErrorKind::Io,
            MODULE,
            format!("writing {}: {e}", dir.join(name).display()),
        )
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(name), contents).map_err(io)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn print(&mut self, s: &str) -> Result<()> {
        self.out
            .write_all(s.as_bytes())
            .map_err(|e| Error::new(ErrorKind::Io, MODULE, format!("writing to stdout: {e}")))
    }

    fn note(&mut self, s: &str) {
        let _ = writeln!(self.err, "{s}");
    }
}

fn certificate_lines(certs: &[crate::stability::StabilityCertificate]) -> String {
    certs
        .iter()
        .map(|c| {
            format!(
                "{}: value = {}, distance = {}, gap = {}, tol = {}, {}\n",
                c.inequality,
                c.value,
                c.distance,
                c.gap,
                c.tol,
                if c.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect()
}

/// Parse `args` (including the program name), run the command, and return
/// the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{}", e.render());
                    if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_INVALID
                    } else {
                        EXIT_PASS
                    }
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INVALID
                }
            };
        }
    };
    let mut io = Io { out, err };
    match dispatch(&cli, &mut io) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            io.note(&format!("error: {e}"));
            exit_code(&e)
        }
    }
}

/// Returns whether every check of the command passed.
fn dispatch(cli: &Cli, io: &mut Io) -> Result<bool> {
    let cfg = build_config(&cli.global)?;
    let json = cli.global.json;
    let out_dir = cfg.out.clone();
    match &cli.command {
        Command::Eval { spec } => {
            let spec = InputSpec::parse(spec)?;
            let r = cmd_eval(&spec, &cfg)?;
            let text = to_json(&r);
            if let Some(d) = &out_dir {
                write_file(d, "eval.json", &text)?;
            }
            if json {
                io.print(&text)?;
            } else {
                let mut s = format!("spec = {}\ndomain = {}\n", r.spec, r.domain);
                for (k, v) in &r.values {
                    s.push_str(&format!("{k} = {v}\n"));
                }
                for (k, v) in &r.metadata {
                    s.push_str(&format!("{k} = {v}\n"));
                }
                io.print(&s)?;
            }
            Ok(true)
        }
        Command::Stability { spec } => {
            let spec = InputSpec::parse(spec)?;
            let r = cmd_stability(&spec, &cfg)?;
            let text = to_json(&r);
            if let Some(d) = &out_dir {
                write_file(d, "stability.json", &text)?;
            }
            io.print(&if json { text } else { certificate_lines(&r.certificates) })?;
            Ok(r.pass)
        }
        Command::Onofri { spec } => {
            let spec = InputSpec::parse(spec)?;
            let r = cmd_onofri(&spec, &cfg)?;
            let text = to_json(&r);
            if let Some(d) = &out_dir {
                write_file(d, "onofri.json", &text)?;
            }
            if json {
                io.print(&text)?;
            } else {
                io.print(&format!(
                    "onofri = {}\nrecenter: {} iterations, |barycenter| = {}\nconstrained gap = {}\n{}",
                    r.onofri,
                    r.recenter_iterations,
                    r.barycenter_norm,
                    r.constrained_gap,
                    certificate_lines(&r.certificates)
                ))?;
            }
            Ok(r.pass)
        }
        Command::Flow {
            kind: FlowCommand::Heat { spec },
        }
        | Command::Heatflow { spec } => flow(FlowKind::Heat, spec, &cfg, json, io),
        Command::Flow {
            kind: FlowCommand::Ks { spec },
        }
        | Command::Ks { spec } => flow(FlowKind::Ks, spec, &cfg, json, io),
        Command::DualityDemo { a, b } => {
            let r = cmd_duality(a, b)?;
            let text = to_json(&r);
            if let Some(d) = &out_dir {
                write_file(d, "duality.json", &text)?;
            }
            if json {
                io.print(&text)?;
            } else {
                io.print(&format!(
                    "dimension = {}\nE* error = {}\nF* error = {}\nbound margin = [{}, {}]\nlipschitz excess = {}\n{}\n",
                    r.dim,
                    r.e_star_error.map_or("n/a".into(), |e| e.to_string()),
                    r.f_star_error.map_or("n/a".into(), |e| e.to_string()),
                    r.bound_margin_min,
                    r.bound_margin_max,
                    r.lipschitz_excess,
                    if r.pass { "PASS" } else { "FAIL" }
                ))?;
            }
            Ok(r.pass)
        }
        Command::Suite { only } => {
            if let Some(bad) = only.iter().find(|id| !suite::CRITERIA.iter().any(|c| c.0 == **id)) {
                return Err(Error::new(
                    ErrorKind::Parameter,
                    MODULE,
                    format!("no acceptance criterion {bad}"),
                ));
            }
            let s = run_suite(&cfg, only);
            let text = to_json(&s);
            if let Some(d) = &out_dir {
                write_file(d, "suite.json", &text)?;
            }
            io.print(&if json { text } else { s.table() })?;
            if !s.pass {
                let ids: Vec<String> = s
                    .criteria
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.id.to_string())
                    .collect();
                io.note(&format!("failing criteria: {}", ids.join(", ")));
            }
            Ok(s.pass)
        }
    }
}

fn flow(kind: FlowKind, spec: &str, cfg: &RunConfig, json: bool, io: &mut Io) -> Result<bool> {
    let spec = InputSpec::parse(spec)?;
    let traj = cmd_flow(kind, &spec, cfg)?;
    let name = match kind {
        FlowKind::Heat => "heat",
        FlowKind::Ks => "ks",
    };
    let text = to_json(&traj);
    let csv = traj.to_csv_string();
    if let Some(d) = &cfg.out {
        write_file(d, &format!("{name}.json"), &text)?;
        write_file(d, &format!("{name}.csv"), &csv)?;
    }
    io.print(if json { &text } else { &csv })?;
    let pass = traj.diagnostic_bool("pass") == Some(true);
    io.note(&format!("{name}: {}", if pass { "pass" } else { "FAIL" }));
    Ok(pass)
}
