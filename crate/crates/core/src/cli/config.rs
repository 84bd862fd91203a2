//! Run configuration: defaults, a flat `key = value` file, then flags.

use crate::error::{Error, ErrorKind, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

const MODULE: &str = "cli";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Radial grid nodes for planar densities.
    pub grid_n: usize,
    pub rmax: f64,
    /// Cartesian grid for off-centre planar densities.
    pub cartesian_n: usize,
    pub cartesian_half_width: f64,
    pub sphere_nz: usize,
    pub sphere_nphi: usize,
    /// Rings of the axisymmetric grid used to lift radial densities to S^2.
    pub lift_nz: usize,
    /// Fourier modes kept for circle fields.
    pub circle_modes: usize,
    /// Absolute certificate tolerance.
    pub tol: f64,
    pub rel_tol: f64,
    pub oracle: bool,
    pub seed: u64,
    pub log_s_min: f64,
    pub log_s_max: f64,
    pub recenter_tol: f64,
    pub recenter_max_iter: usize,
    pub heat_times: Vec<f64>,
    pub heat_dt: f64,
    pub ks_n: usize,
    pub ks_rmax: f64,
    /// Decades between the first node and `ks_rmax`.
    pub ks_decades: f64,
    pub ks_dt: f64,
    pub ks_t_end: f64,
    pub ks_samples: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid_n: 4096,
            rmax: 1e5,
            cartesian_n: 512,
            cartesian_half_width: 80.0,
            sphere_nz: 48,
            sphere_nphi: 97,
            lift_nz: 512,
            circle_modes: 96,
            tol: 1e-6,
            rel_tol: 1e-4,
            oracle: false,
            seed: 0,
            log_s_min: -6.0,
            log_s_max: 6.0,
            recenter_tol: 1e-10,
            recenter_max_iter: 50,
            heat_times: vec![0.0, 0.1, 0.25, 0.5, 1.0],
            heat_dt: 1e-3,
            ks_n: 1024,
            ks_rmax: 1e5,
            ks_decades: 10.0,
            ks_dt: 2e-3,
            ks_t_end: 50.0,
            ks_samples: 48,
            out: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::new(ErrorKind::Parameter, MODULE, msg)
}

impl RunConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| {
                Error::new(
                    ErrorKind::Parse,
                    MODULE,
                    format!("config key {key}: cannot parse {v:?}"),
                )
            })
        }
        match key {
            "grid_n" => self.grid_n = num(key, value)?,
            "rmax" => self.rmax = num(key, value)?,
            "cartesian_n" => self.cartesian_n = num(key, value)?,
            "cartesian_half_width" => self.cartesian_half_width = num(key, value)?,
            "sphere_nz" => self.sphere_nz = num(key, value)?,
            "sphere_nphi" => self.sphere_nphi = num(key, value)?,
            "lift_nz" => self.lift_nz = num(key, value)?,
            "circle_modes" => self.circle_modes = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "rel_tol" => self.rel_tol = num(key, value)?,
            "oracle" => self.oracle = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "log_s_min" => self.log_s_min = num(key, value)?,
            "log_s_max" => self.log_s_max = num(key, value)?,
            "recenter_tol" => self.recenter_tol = num(key, value)?,
            "recenter_max_iter" => self.recenter_max_iter = num(key, value)?,
            "heat_times" => {
                self.heat_times = value
                    .split(';')
                    .map(|t| num(key, t.trim()))
                    .collect::<Result<Vec<f64>>>()?
            }
            "heat_dt" => self.heat_dt = num(key, value)?,
            "ks_n" => self.ks_n = num(key, value)?,
            "ks_rmax" => self.ks_rmax = num(key, value)?,
            "ks_decades" => self.ks_decades = num(key, value)?,
            "ks_dt" => self.ks_dt = num(key, value)?,
            "ks_t_end" => self.ks_t_end = num(key, value)?,
            "ks_samples" => self.ks_samples = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                return Err(Error::new(
                    ErrorKind::Parse,
                    MODULE,
                    format!("unknown config key {key:?}"),
                ))
            }
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::new(
                    ErrorKind::Parse,
                    MODULE,
                    format!("config line {}: expected key = value, got {line:?}", no + 1),
                ));
            };
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::new(e.kind, MODULE, format!("config line {}: {}", no + 1, e.detail)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::new(ErrorKind::Io, MODULE, format!("reading config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Flat `key = value` text that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in v.as_object().expect("struct") {
            let s = match v {
                serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {s}\n"));
        }
        if let Some(o) = &self.out {
            out.push_str(&format!("out = {}\n", o.display()));
        }
        out
    }

    /// Range checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if !(64..=1 << 20).contains(&self.grid_n) {
            return Err(invalid(format!("grid_n must lie in 64..=1048576, got {}", self.grid_n)));
        }
        if !(self.rmax > 1.0 && self.rmax.is_finite()) {
            return Err(invalid(format!("rmax must exceed 1, got {}", self.rmax)));
        }
        if !(8..=4096).contains(&self.cartesian_n) {
            return Err(invalid(format!(
                "cartesian_n must lie in 8..=4096, got {}",
                self.cartesian_n
            )));
        }
        pos("cartesian_half_width", self.cartesian_half_width)?;
        if self.sphere_nz < 4 || self.sphere_nphi < 2 * self.sphere_nz - 1 {
            return Err(invalid(format!(
                "sphere grid needs nz >= 4 and nphi >= 2 nz - 1, got {} x {}",
                self.sphere_nz, self.sphere_nphi
            )));
        }
        if !(16..=8192).contains(&self.lift_nz) {
            return Err(invalid(format!("lift_nz must lie in 16..=8192, got {}", self.lift_nz)));
        }
        if !(1..=4096).contains(&self.circle_modes) {
            return Err(invalid(format!(
                "circle_modes must lie in 1..=4096, got {}",
                self.circle_modes
            )));
        }
        pos("tol", self.tol)?;
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(invalid(format!("rel_tol must be nonnegative, got {}", self.rel_tol)));
        }
        if !(self.log_s_min < self.log_s_max && self.log_s_min.is_finite() && self.log_s_max.is_finite()) {
            return Err(invalid("log_s_min must be below log_s_max"));
        }
        pos("recenter_tol", self.recenter_tol)?;
        if self.recenter_max_iter == 0 {
            return Err(invalid("recenter_max_iter must be positive"));
        }
        if self.heat_times.is_empty()
            || self.heat_times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
            || self.heat_times.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(invalid("heat_times must be nonnegative and strictly increasing"));
        }
        pos("heat_dt", self.heat_dt)?;
        if !(64..=1 << 16).contains(&self.ks_n) {
            return Err(invalid(format!("ks_n must lie in 64..=65536, got {}", self.ks_n)));
        }
        pos("ks_rmax", self.ks_rmax)?;
        pos("ks_decades", self.ks_decades)?;
        pos("ks_dt", self.ks_dt)?;
        pos("ks_t_end", self.ks_t_end)?;
        if self.ks_samples < 3 {
            return Err(invalid("ks_samples must be at least 3"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let mut d = RunConfig {
            grid_n: 1,
            ..Default::default()
        };
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn file_overrides_and_errors() {
        let mut c = RunConfig::default();
        c.apply_text("# coarse\ngrid_n = 256\n\nheat_times = 0.1; 0.2  # two times\noracle=true\n")
            .unwrap();
        assert_eq!(c.grid_n, 256);
        assert_eq!(c.heat_times, vec![0.1, 0.2]);
        assert!(c.oracle);
        let e = c.apply_text("grid_n = many").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Parse);
        assert!(e.to_string().contains("line 1"), "{e}");
        assert!(c.apply_text("nonsense = 1").is_err());
        assert!(c.apply_text("grid_n").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for (k, v) in [
            ("grid_n", "8"),
            ("rmax", "0.5"),
            ("tol", "0"),
            ("tol", "NaN"),
            ("heat_times", "0.5;0.1"),
            ("sphere_nphi", "10"),
            ("ks_samples", "2"),
            ("log_s_min", "7"),
        ] {
            let mut c = RunConfig::default();
            c.set(k, v).unwrap();
            assert_eq!(c.validate().unwrap_err().kind, ErrorKind::Parameter, "{k} = {v}");
        }
    }
}
