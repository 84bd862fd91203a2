//! Functionals on S^1: half-Laplacian energy and the Lebedev-Milin functional.

use super::fields::CircleField;
use crate::grids::quadrature::pairwise_sum;
use crate::grids::{CircleGrid, Quadrature};
use serde::Serialize;

/// `sum_{k in Z} |k| |u_hat(k)|^2`.
pub fn half_laplacian_energy(u: &CircleField) -> f64 {
    let terms: Vec<f64> = u
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| 2.0 * k as f64 * c.norm_sqr())
        .collect();
    pairwise_sum(&terms)
}

/// Number of quadrature angles used for `int e^u dsigma`.
pub fn default_circle_nodes(u: &CircleField) -> usize {
    (8 * u.max_mode()).max(1024).next_power_of_two()
}

/// `log int e^u dsigma` on an equispaced grid with the maximum factored out.
pub fn log_exp_integral(u: &CircleField, grid: &CircleGrid) -> f64 {
    let v = u.values_on(grid);
    crate::grids::quadrature::log_mean_exp(grid.weights(), &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LebedevMilinParts {
    pub energy: f64,
    pub log_exp_integral: f64,
    pub mean: f64,
    pub value: f64,
}

/// `1/2 energy - log int e^u + int u`.
pub fn lebedev_milin_parts(u: &CircleField) -> LebedevMilinParts {
    let grid = CircleGrid::new(default_circle_nodes(u)).expect("valid size");
    let mean = u.mean();
    let centred = u.shifted(-mean);
    let energy = half_laplacian_energy(u);
    let lei = log_exp_integral(&centred, &grid);
    LebedevMilinParts {
        energy,
        log_exp_integral: lei + mean,
        mean,
        value: 0.5 * energy - lei,
    }
}

pub fn lebedev_milin_functional(u: &CircleField) -> f64 {
    lebedev_milin_parts(u).value
}
