//! Entropy-dissipating flows: the heat semigroup on S^2 and radial
//! critical-mass Keller-Segel on the plane.

pub mod heat;
pub mod ks;

pub use heat::{
    decay_check, dissipation_check, heat_evolve, heat_trajectory, DecayReport, DissipationCheck, HeatState,
};
pub use ks::{ks_evolve, ks_rate_fit, KsConfig, KsState, RateFit};

use crate::error::{Error, ErrorKind, Result};
use serde::Serialize;
use std::io::Write;

const MODULE: &str = "flows";

/// Sampled time series of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub kind: String,
    pub times: Vec<f64>,
    pub free_energy: Vec<f64>,
    pub distance_l1: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub mass_error: Vec<f64>,
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
}

impl FlowTrajectory {
    pub(crate) fn new(kind: &str) -> Self {
        FlowTrajectory {
            kind: kind.to_string(),
            times: Vec::new(),
            free_energy: Vec::new(),
            distance_l1: Vec::new(),
            dissipation: Vec::new(),
            mass_error: Vec::new(),
            diagnostics: serde_json::Map::new(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, free_energy: f64, distance: f64, dissipation: f64, mass_error: f64) {
        self.times.push(t);
        self.free_energy.push(free_energy);
        self.distance_l1.push(distance);
        self.dissipation.push(dissipation);
        self.mass_error.push(mass_error);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub(crate) fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.diagnostics.insert(key.to_string(), v);
    }

    pub fn diagnostic_f64(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).and_then(|v| v.as_f64())
    }

    pub fn diagnostic_bool(&self, key: &str) -> Option<bool> {
        self.diagnostics.get(key).and_then(|v| v.as_bool())
    }

    /// CSV with columns `t, free_energy, distance_L1, dissipation, mass_error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::new(ErrorKind::Io, MODULE, format!("writing trajectory CSV: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "free_energy", "distance_L1", "dissipation", "mass_error"])
            .map_err(io)?;
        for i in 0..self.len() {
            w.write_record(
                [
                    self.times[i],
                    self.free_energy[i],
                    self.distance_l1[i],
                    self.dissipation[i],
                    self.mass_error[i],
                ]
                .iter()
                .map(|x| format!("{x:e}")),
            )
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::new(ErrorKind::Io, MODULE, format!("writing trajectory CSV: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let mut t = FlowTrajectory::new("test");
        t.push(0.0, 1.0, 0.5, 0.25, 0.0);
        t.push(1.0, 0.5, 0.25, 0.125, 1e-12);
        let s = t.to_csv_string();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("t,free_energy,distance_L1,dissipation,mass_error"));
        assert_eq!(lines.next(), Some("0e0,1e0,5e-1,2.5e-1,0e0"));
        assert_eq!(s.lines().count(), 3);
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["kind"], "test");
    }
}
