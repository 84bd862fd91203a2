//! Term-by-term replay of the argument that turns the strong Young
//! inequality and the L1 Onofri bound into the spherical log-HLS bound.

use crate::error::Result;
use crate::functionals::fields::SphereField;
use crate::functionals::sphere::{dirichlet_energy, sphere_green_apply, spherical_free_energy_parts};
use crate::optimizers::{nearest_sphere_l1, sphere_l1_distance};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferChain {
    /// `E(u) + E*(f) - <u, f>` and its lower bound `1/2 a^2`.
    pub young_residual: f64,
    /// `F(u) - E(u)`, the Onofri deficit, and its lower bound `1/4 b^2`.
    pub onofri_deficit: f64,
    /// `a = ||(f+1) - e^u||_1`, `b = ||e^u - e^{u0}||_1`, `c = ||(f+1) - e^{u0}||_1`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `H_S(f)`, `E*(f) + F(u) - <u,f>`, `1/2 a^2 + 1/4 b^2`, `1/4 (a^2 + b^2)`,
    /// `1/8 (a + b)^2`, `1/8 c^2`; each should dominate the next.
    pub lines: [f64; 6],
    pub tol: f64,
    pub holds: bool,
}

/// `E(u) = log int e^u - int u`, `F(u) = 1/4 D(u)`, `E*(f) = int (f+1) log(f+1)`,
/// `F*(f) = <f, G f>`.
///
/// The first step `E*(f) - F*(f) >= E*(f) + F(u) - <u, f>` is an equality
/// at the dual point `u = 2 G f` and fails for most other `u`, so the chain
/// is evaluated there.
pub fn transfer_chain(f: &SphereField, tol: f64) -> Result<TransferChain> {
    let parts = spherical_free_energy_parts(f)?;
    let e_star = parts.entropy;
    let h_s = parts.free_energy;
    let u = sphere_green_apply(f)?.map(|v| 2.0 * v);
    let lei = u.log_exp_integral();
    let u = u.map(|v| v - lei);
    let e_u = -u.integral();
    let f_u = 0.25 * dirichlet_energy(&u);
    let pair = u.zip_with(f, |a, b| a * b)?.integral();
    let young_residual = e_u + e_star - pair;
    let onofri_deficit = f_u - e_u;
    let eu = u.map(f64::exp);
    let g = f.map(|v| v + 1.0);
    let a = eu.zip_with(&g, |x, y| (x - y).abs())?.integral();
    let near = nearest_sphere_l1(&eu, &[]);
    let b = near.distance;
    let c = sphere_l1_distance(&g, &near.params);
    let lines = [
        h_s,
        e_star + f_u - pair,
        0.5 * a * a + 0.25 * b * b,
        0.25 * (a * a + b * b),
        0.125 * (a + b) * (a + b),
        0.125 * c * c,
    ];
    let holds = lines.windows(2).all(|w| w[0] >= w[1] - tol)
        && young_residual >= 0.5 * a * a - tol
        && onofri_deficit >= 0.25 * b * b - tol;
    Ok(TransferChain {
        young_residual,
        onofri_deficit,
        a,
        b,
        c,
        lines,
        tol,
        holds,
    })
}
