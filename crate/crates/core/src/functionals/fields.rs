//! Densities on the plane and fields on S^2 and S^1.

use crate::error::{bail, Result};
use crate::grids::quadrature::log_mean_exp;
use crate::grids::Quadrature;
use crate::grids::{integrate, CartesianGrid, CircleGrid, RadialGrid, SphereGrid};
use crate::harmonics::{self, ShCoeffs};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

const MODULE: &str = "functionals";

/// Radial density on the plane: values at the grid radii.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    mass: f64,
}

impl RadialDensity {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(
                Dimension,
                MODULE,
                "radial density: {} values for {} nodes",
                values.len(),
                grid.len()
            );
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            bail!(
                Domain,
                MODULE,
                "radial density must be finite and nonnegative, found {v}"
            );
        }
        let mass = integrate(&values, grid.as_ref())?;
        Ok(RadialDensity { grid, values, mass })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<RadialGrid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid_arc(), self.values.iter().map(|v| v * c).collect())
    }

    /// Rescale to unit mass.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.mass > 0.0) {
            bail!(
                Normalization,
                MODULE,
                "cannot normalize a density of mass {}",
                self.mass
            );
        }
        self.scaled(1.0 / self.mass)
    }

    /// Heuristic divergence test for `int rho log(e + |x|^2) dx`: true when
    /// the density still decays no faster than `r^-2` at a grid edge lying a
    /// decade beyond the median mass radius. Returns the local decay exponent
    /// in that case.
    pub fn divergent_log_moment(&self) -> Option<f64> {
        let r = self.grid.nodes();
        let n = r.len();
        let v = &self.values;
        let r_max = r[n - 1];
        if !(v[n - 1] > 0.0) || 2.0 * std::f64::consts::PI * r_max * r_max * v[n - 1] < 1e-6 {
            return None;
        }
        let m = self.grid.cumulative(v);
        let half = m[n - 1] / 2.0;
        let median = r[m.iter().position(|&x| x >= half).unwrap_or(n - 1)];
        if r_max < 10.0 * median {
            return None;
        }
        let j = r.iter().position(|&x| x >= r_max / 2.0).unwrap_or(n - 2).min(n - 2);
        if !(v[j] > 0.0) {
            return None;
        }
        let p = -(v[n - 1] / v[j]).ln() / (r_max / r[j]).ln();
        (p <= 2.0).then_some(p)
    }
}

/// Density on a Cartesian grid (cell-centre values).
#[derive(Debug, Clone)]
pub struct PlanarDensity {
    grid: Arc<CartesianGrid>,
    values: Vec<f64>,
    mass: f64,
}

impl PlanarDensity {
    pub fn new(grid: Arc<CartesianGrid>, values: Vec<f64>) -> Result<Self> {
        let n = grid.n();
        if values.len() != n * n {
            bail!(
                Dimension,
                MODULE,
                "planar density: {} values for {} cells",
                values.len(),
                n * n
            );
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            bail!(
                Domain,
                MODULE,
                "planar density must be finite and nonnegative, found {v}"
            );
        }
        let mass = integrate(&values, grid.as_ref())?;
        Ok(PlanarDensity { grid, values, mass })
    }

    pub fn from_fn(grid: Arc<CartesianGrid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let n = grid.n();
        let values = (0..n * n).map(|k| f(grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<CartesianGrid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn normalized(&self) -> Result<Self> {
        if !(self.mass > 0.0) {
            bail!(
                Normalization,
                MODULE,
                "cannot normalize a density of mass {}",
                self.mass
            );
        }
        let c = 1.0 / self.mass;
        Self::new(self.grid_arc(), self.values.iter().map(|v| v * c).collect())
    }

    /// Bilinear interpolation between cell centres; zero outside the grid.
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let h = g.spacing();
        let l = g.half_width();
        if x[0].abs() > l || x[1].abs() > l {
            return 0.0;
        }
        let fx = ((x[0] + l) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let fy = ((x[1] + l) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (fx.floor() as usize).min(n - 2);
        let j = (fy.floor() as usize).min(n - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v = |a: usize, b: usize| self.values[a * n + b];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

/// Either planar representation.
#[derive(Debug, Clone)]
pub enum PlanarInput {
    Radial(RadialDensity),
    Cartesian(PlanarDensity),
}

impl PlanarInput {
    pub fn mass(&self) -> f64 {
        match self {
            PlanarInput::Radial(d) => d.mass(),
            PlanarInput::Cartesian(d) => d.mass(),
        }
    }

    pub fn grid_summary(&self) -> serde_json::Value {
        match self {
            PlanarInput::Radial(d) => d.grid().summary(),
            PlanarInput::Cartesian(d) => d.grid().summary(),
        }
    }
}

/// Real function on S^2 sampled on a [`SphereGrid`].
///
/// Axisymmetric fields (functions of z only) use plain Legendre coefficients
/// for every spectral operation.
#[derive(Debug, Clone)]
pub struct SphereField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    axisymmetric: bool,
}

impl SphereField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nz() * grid.nphi() {
            bail!(
                Dimension,
                MODULE,
                "sphere field: {} values for {} nodes",
                values.len(),
                grid.nz() * grid.nphi()
            );
        }
        Ok(SphereField {
            grid,
            values,
            axisymmetric: false,
        })
    }

    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.nz() * grid.nphi()).map(|i| f(grid.point(i))).collect();
        SphereField {
            grid,
            values,
            axisymmetric: false,
        }
    }

    /// Field depending on z only.
    pub fn from_zonal(grid: Arc<SphereGrid>, f: impl Fn(f64) -> f64) -> Self {
        let nphi = grid.nphi();
        let mut values = Vec::with_capacity(grid.nz() * nphi);
        for &z in grid.z() {
            let v = f(z);
            values.extend(std::iter::repeat_n(v, nphi));
        }
        SphereField {
            grid,
            values,
            axisymmetric: true,
        }
    }

    /// Field from harmonic coefficients.
    pub fn from_coeffs(grid: Arc<SphereGrid>, coeffs: &ShCoeffs) -> Self {
        let values = harmonics::synthesize(&grid, coeffs);
        SphereField {
            grid,
            values,
            axisymmetric: false,
        }
    }

    pub fn zero(grid: Arc<SphereGrid>) -> Self {
        Self::from_zonal(grid, |_| 0.0)
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<SphereGrid> {
        Arc::clone(&self.grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.axisymmetric
    }

    /// Mark the field as a function of z only. Values are replaced by their
    /// ring means.
    pub fn into_axisymmetric(mut self) -> Self {
        let nphi = self.grid.nphi();
        for ring in self.values.chunks_mut(nphi) {
            let m = ring.iter().sum::<f64>() / nphi as f64;
            ring.iter_mut().for_each(|v| *v = m);
        }
        self.axisymmetric = true;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SphereField {
            grid: self.grid_arc(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            axisymmetric: self.axisymmetric,
        }
    }

    pub fn zip_with(&self, other: &SphereField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.values.len() != other.values.len() {
            bail!(Dimension, MODULE, "sphere fields live on different grids");
        }
        Ok(SphereField {
            grid: self.grid_arc(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            axisymmetric: self.axisymmetric && other.axisymmetric,
        })
    }

    /// `int field dsigma`.
    pub fn integral(&self) -> f64 {
        integrate(&self.values, self.grid.as_ref()).expect("field matches grid")
    }

    /// `log int exp(field) dsigma`.
    pub fn log_exp_integral(&self) -> f64 {
        log_mean_exp(self.grid.weights(), &self.values)
    }

    pub fn ring_values(&self) -> Vec<f64> {
        let nphi = self.grid.nphi();
        self.values
            .chunks(nphi)
            .map(|ring| ring.iter().sum::<f64>() / nphi as f64)
            .collect()
    }

    /// Plain Legendre coefficients up to `grid.lmax()` (axisymmetric fields only).
    pub fn zonal_coeffs(&self) -> Option<Vec<f64>> {
        if !self.axisymmetric {
            return None;
        }
        Some(harmonics::zonal_analyze(
            self.grid.z(),
            self.grid.ring_weights(),
            &self.ring_values(),
            self.grid.lmax(),
        ))
    }

    /// Orthonormal harmonic coefficients up to `grid.lmax()`.
    pub fn spectrum(&self) -> ShCoeffs {
        match self.zonal_coeffs() {
            Some(a) => harmonics::zonal_to_sh(&a),
            None => harmonics::analyze(&self.grid, &self.values, self.grid.lmax()),
        }
    }

    /// Sup-norm difference of grid values.
    pub fn sup_distance(&self, other: &SphereField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Real function on S^1 through its Fourier coefficients `u_hat(k)`,
/// `k = 0..=K`; negative modes are the complex conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleField {
    coeffs: Vec<Complex64>,
}

impl CircleField {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            bail!(Dimension, MODULE, "circle field needs at least the k = 0 coefficient");
        }
        if coeffs[0].im.abs() > 1e-12 * (1.0 + coeffs[0].re.abs()) {
            bail!(
                Domain,
                MODULE,
                "u_hat(0) must be real for a real field, got {}",
                coeffs[0]
            );
        }
        coeffs[0].im = 0.0;
        Ok(CircleField { coeffs })
    }

    /// From `u = a0 + sum_k a_k cos k theta + b_k sin k theta`.
    pub fn from_real(a0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let k = cos.len().max(sin.len());
        let mut coeffs = vec![Complex64::new(a0, 0.0)];
        for j in 0..k {
            let a = cos.get(j).copied().unwrap_or(0.0);
            let b = sin.get(j).copied().unwrap_or(0.0);
            coeffs.push(Complex64::new(0.5 * a, -0.5 * b));
        }
        CircleField { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_mode(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let (s, co) = (k as f64 * theta).sin_cos();
            // 2 Re(c e^{ik theta})
            v += 2.0 * (c.re * co - c.im * s);
        }
        v
    }

    pub fn values_on(&self, grid: &CircleGrid) -> Vec<f64> {
        grid.theta().iter().map(|&t| self.eval(t)).collect()
    }

    /// Add a constant to the field.
    pub fn shifted(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0].re += c;
        CircleField { coeffs }
    }
}
