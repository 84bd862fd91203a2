//! Planar log-HLS free energy on radial and Cartesian grids.

use super::fields::{PlanarDensity, PlanarInput, RadialDensity};
use crate::error::{bail, Result};
use crate::grids::quadrature::{pairwise_dot, pairwise_map};
use crate::grids::Quadrature;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

const MODULE: &str = "functionals";

/// Accepted deviation from unit mass in [`planar_free_energy`].
pub const MASS_TOL: f64 = 1e-5;

/// `log(2 sqrt(pi) / Gamma(1/4)^2)`: self-term of the log kernel on a unit
/// square lattice that makes the midpoint lattice sum fourth-order accurate.
pub const LATTICE_SELF_CONSTANT: f64 = -1.3105329259115095;

/// `log(1/2) + (log 2 - 3 + pi/2) / 2`: average of `log|x|` over the unit
/// square centred at 0.
pub const CELL_AVERAGE_CONSTANT: f64 = -1.0611754268825244;

/// Self-cell value of the log kernel on Cartesian grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelfCell {
    #[default]
    Lattice,
    CellAverage,
}

impl SelfCell {
    pub fn value(self, h: f64) -> f64 {
        h.ln()
            + match self {
                SelfCell::Lattice => LATTICE_SELF_CONSTANT,
                SelfCell::CellAverage => CELL_AVERAGE_CONSTANT,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyParts {
    pub entropy: f64,
    pub interaction: f64,
    pub free_energy: f64,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `int rho log rho dx` (0 log 0 = 0).
pub fn entropy_term(rho: &PlanarInput) -> f64 {
    match rho {
        PlanarInput::Radial(d) => {
            let v: Vec<f64> = d.values().iter().map(|&x| xlogx(x)).collect();
            pairwise_dot(d.grid().weights(), &v)
        }
        PlanarInput::Cartesian(d) => {
            let v: Vec<f64> = d.values().iter().map(|&x| xlogx(x)).collect();
            pairwise_dot(d.grid().weights(), &v)
        }
    }
}

/// `int int rho(x) log|x - x'| rho(x') dx dx'` for a radial density via the
/// angular-mean identity, `2 int rho(x) log|x| M(|x|) dx`.
pub fn log_interaction_radial(rho: &RadialDensity) -> Result<f64> {
    if let Some(p) = rho.divergent_log_moment() {
        bail!(
            Domain,
            MODULE,
            "log moment diverges on the grid: density decays like r^-{p:.2} at r_max"
        );
    }
    let g = rho.grid();
    let m = g.cumulative(rho.values());
    let r = g.nodes();
    let v: Vec<f64> = (0..r.len()).map(|i| rho.values()[i] * r[i].ln() * m[i]).collect();
    Ok(2.0 * pairwise_dot(g.weights(), &v))
}

fn fft2(data: &mut [Complex64], p: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(p)
    } else {
        planner.plan_fft_forward(p)
    };
    fft.process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); p * p];
    for i in 0..p {
        for j in 0..p {
            t[j * p + i] = data[i * p + j];
        }
    }
    fft.process(&mut t);
    for i in 0..p {
        for j in 0..p {
            data[i * p + j] = t[j * p + i];
        }
    }
}

/// Cartesian log interaction: midpoint lattice sum with the given self-cell
/// value, evaluated by zero-padded FFT convolution.
pub fn log_interaction_cartesian(rho: &PlanarDensity, self_cell: SelfCell) -> f64 {
    let g = rho.grid();
    let n = g.n();
    let h = g.spacing();
    let p = 2 * n;
    let mut kernel = vec![Complex64::new(0.0, 0.0); p * p];
    let wrap = |i: usize| -> f64 {
        if i < n {
            i as f64
        } else {
            i as f64 - p as f64
        }
    };
    for i in 0..p {
        for j in 0..p {
            if i == n || j == n {
                continue;
            }
            let (a, b) = (wrap(i), wrap(j));
            let v = if i == 0 && j == 0 {
                self_cell.value(h)
            } else {
                h.ln() + 0.5 * (a * a + b * b).ln()
            };
            kernel[i * p + j] = Complex64::new(v, 0.0);
        }
    }
    let mut dens = vec![Complex64::new(0.0, 0.0); p * p];
    for i in 0..n {
        for j in 0..n {
            dens[i * p + j] = Complex64::new(rho.values()[i * n + j], 0.0);
        }
    }
    fft2(&mut kernel, p, false);
    fft2(&mut dens, p, false);
    for (d, k) in dens.iter_mut().zip(&kernel) {
        *d *= k;
    }
    fft2(&mut dens, p, true);
    let scale = 1.0 / (p * p) as f64;
    let vals = rho.values();
    let s = pairwise_map(0, n * n, &|k| {
        let (i, j) = (k / n, k % n);
        vals[k] * dens[i * p + j].re * scale
    });
    s * h.powi(4)
}

/// Direct O(cells^2) lattice sum; the FFT path must agree with it.
pub fn log_interaction_cartesian_direct(rho: &PlanarDensity, self_cell: SelfCell) -> f64 {
    let g = rho.grid();
    let n = g.n();
    let h = g.spacing();
    let v = rho.values();
    let self_v = self_cell.value(h);
    let s = pairwise_map(0, n * n, &|a| {
        let (ai, aj) = ((a / n) as f64, (a % n) as f64);
        let inner = pairwise_map(0, n * n, &|b| {
            let (bi, bj) = ((b / n) as f64, (b % n) as f64);
            let k = if a == b {
                self_v
            } else {
                h.ln() + 0.5 * ((ai - bi).powi(2) + (aj - bj).powi(2)).ln()
            };
            k * v[b]
        });
        v[a] * inner
    });
    s * h.powi(4)
}

pub fn log_interaction(rho: &PlanarInput) -> Result<f64> {
    match rho {
        PlanarInput::Radial(d) => log_interaction_radial(d),
        PlanarInput::Cartesian(d) => Ok(log_interaction_cartesian(d, SelfCell::default())),
    }
}

/// Entropy, interaction and `H = entropy + 2 interaction + 1 + log pi`.
pub fn planar_free_energy_parts(rho: &PlanarInput) -> Result<FreeEnergyParts> {
    let m = rho.mass();
    if !((m - 1.0).abs() <= MASS_TOL) {
        bail!(
            Normalization,
            MODULE,
            "planar free energy needs unit mass (|M - 1| <= {MASS_TOL:e}), got M = {m}; normalize rho/M first"
        );
    }
    let entropy = entropy_term(rho);
    let interaction = log_interaction(rho)?;
    Ok(FreeEnergyParts {
        entropy,
        interaction,
        free_energy: entropy + 2.0 * interaction + 1.0 + PI.ln(),
    })
}

pub fn planar_free_energy(rho: &PlanarInput) -> Result<f64> {
    Ok(planar_free_energy_parts(rho)?.free_energy)
}
