//! Quadrature grids on the plane (radial and Cartesian), the sphere and the
//! circle. All grids are immutable after construction.

pub mod quadrature;

use crate::error::{bail, Result};
use quadrature::{gauss_legendre, gregory_weights, pairwise_dot};
use serde::Serialize;
use std::f64::consts::PI;

const MODULE: &str = "grids";

/// End-correction order of the radial trapezoid rule.
pub const GREGORY_ORDER: usize = 8;

/// Default log-radius span of a log-uniform grid: r_min = r_max * exp(-span).
pub const DEFAULT_LOG_SPAN: f64 = 27.631021115928547; // ln(1e12)

/// Anything with quadrature weights.
pub trait Quadrature {
    fn weights(&self) -> &[f64];

    fn node_count(&self) -> usize {
        self.weights().len()
    }
}

/// Quadrature of `values` against the grid weights, with fixed pairwise order.
pub fn integrate<G: Quadrature + ?Sized>(values: &[f64], grid: &G) -> Result<f64> {
    let w = grid.weights();
    if values.len() != w.len() {
        bail!(
            Dimension,
            MODULE,
            "integrate: {} values for a grid with {} nodes",
            values.len(),
            w.len()
        );
    }
    Ok(pairwise_dot(w, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialScheme {
    LogUniform,
    Uniform,
}

/// Radial grid for integrals of radial functions over the plane.
///
/// Integration runs along a uniform "line" variable: `s = log r` for the
/// log-uniform scheme, `r` itself for the uniform scheme (which carries one
/// virtual node at `r = 0`).
#[derive(Debug, Clone)]
pub struct RadialGrid {
    scheme: RadialScheme,
    r: Vec<f64>,
    w: Vec<f64>,
    r_max: f64,
    step: f64,
    line: Vec<f64>,
    jac: Vec<f64>,
    offset: usize,
    core_area: f64,
}

impl RadialGrid {
    pub fn log_uniform(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || !(r_min > 0.0) || r_min >= r_max {
            bail!(
                Domain,
                MODULE,
                "log-uniform grid needs 0 < r_min < r_max, got {r_min}, {r_max}"
            );
        }
        if n < 16 {
            bail!(Domain, MODULE, "radial grid needs n >= 16, got {n}");
        }
        let s0 = r_min.ln();
        let step = (r_max.ln() - s0) / (n - 1) as f64;
        let line: Vec<f64> = (0..n).map(|i| s0 + step * i as f64).collect();
        let mut r: Vec<f64> = line.iter().map(|s| s.exp()).collect();
        r[n - 1] = r_max;
        let jac: Vec<f64> = r.iter().map(|r| 2.0 * PI * r * r).collect();
        let g = gregory_weights(n, GREGORY_ORDER);
        let core_area = PI * r[0] * r[0];
        let mut w: Vec<f64> = (0..n).map(|i| g[i] * step * jac[i]).collect();
        w[0] += core_area;
        Ok(RadialGrid {
            scheme: RadialScheme::LogUniform,
            r,
            w,
            r_max,
            step,
            line,
            jac,
            offset: 0,
            core_area,
        })
    }

    pub fn uniform(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) {
            bail!(Domain, MODULE, "radial grid needs r_max > 0, got {r_max}");
        }
        if n < 16 {
            bail!(Domain, MODULE, "radial grid needs n >= 16, got {n}");
        }
        let step = r_max / n as f64;
        let line: Vec<f64> = (0..=n).map(|i| step * i as f64).collect();
        let jac: Vec<f64> = line.iter().map(|r| 2.0 * PI * r).collect();
        let g = gregory_weights(n + 1, GREGORY_ORDER);
        let r: Vec<f64> = line[1..].to_vec();
        let w: Vec<f64> = (1..=n).map(|i| g[i] * step * jac[i]).collect();
        Ok(RadialGrid {
            scheme: RadialScheme::Uniform,
            r,
            w,
            r_max,
            step,
            line,
            jac,
            offset: 1,
            core_area: 0.0,
        })
    }

    pub fn scheme(&self) -> RadialScheme {
        self.scheme
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    /// Spacing of the line variable.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Cumulative mass `M(r_i) = int_{|x| < r_i} rho dx` from nodal values,
    /// using 8-point local interpolation on the line variable.
    pub fn cumulative(&self, rho: &[f64]) -> Vec<f64> {
        let n_ext = self.line.len();
        let mut g = vec![0.0; n_ext];
        for i in 0..self.r.len() {
            g[i + self.offset] = self.jac[i + self.offset] * rho[i];
        }
        let c = quadrature::cumulative_uniform(&g, self.step, GREGORY_ORDER);
        (0..self.r.len())
            .map(|i| self.core_area * rho[0] + c[i + self.offset])
            .collect()
    }

    /// Interpolate nodal values at radius `r` (8-point Lagrange in the line
    /// variable). Returns the first nodal value inside the first node and 0
    /// beyond `r_max`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let n = self.r.len();
        if r > self.r_max {
            return 0.0;
        }
        if r <= self.r[0] {
            return values[0];
        }
        let x = match self.scheme {
            RadialScheme::LogUniform => (r.ln() - self.line[0]) / self.step,
            RadialScheme::Uniform => (r - self.line[1]) / self.step,
        };
        let m = GREGORY_ORDER.min(n);
        let base = (x.floor() as isize - (m as isize / 2 - 1)).clamp(0, (n - m) as isize) as usize;
        let xs: Vec<f64> = (0..m).map(|k| (base + k) as f64).collect();
        let lw = quadrature::lagrange_weights(&xs, x);
        lw.iter().zip(&values[base..base + m]).map(|(a, b)| a * b).sum()
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "radial",
            "scheme": self.scheme,
            "n": self.r.len(),
            "r_min": self.r[0],
            "r_max": self.r_max,
        })
    }
}

impl Quadrature for RadialGrid {
    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Build a radial grid; the log-uniform scheme uses [`DEFAULT_LOG_SPAN`].
pub fn make_radial_grid(r_max: f64, n: usize, scheme: RadialScheme) -> Result<RadialGrid> {
    make_radial_grid_with_span(r_max, n, scheme, DEFAULT_LOG_SPAN)
}

pub fn make_radial_grid_with_span(r_max: f64, n: usize, scheme: RadialScheme, span: f64) -> Result<RadialGrid> {
    if !(r_max > 0.0) {
        bail!(Domain, MODULE, "make_radial_grid: r_max must be positive, got {r_max}");
    }
    match scheme {
        RadialScheme::LogUniform => {
            if !(span > 0.0) {
                bail!(Domain, MODULE, "make_radial_grid: span must be positive, got {span}");
            }
            RadialGrid::log_uniform(r_max * (-span).exp(), r_max, n)
        }
        RadialScheme::Uniform => RadialGrid::uniform(r_max, n),
    }
}

/// Cell-centred square grid on [-L, L]^2 with N cells per side.
#[derive(Debug, Clone)]
pub struct CartesianGrid {
    n: usize,
    half_width: f64,
    h: f64,
    centers: Vec<f64>,
    w: Vec<f64>,
}

impl CartesianGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 {
            bail!(Domain, MODULE, "Cartesian grid needs N >= 8 per side, got {n}");
        }
        if !(half_width > 0.0) {
            bail!(Domain, MODULE, "Cartesian grid needs L > 0, got {half_width}");
        }
        let h = 2.0 * half_width / n as f64;
        let centers = (0..n).map(|i| -half_width + (i as f64 + 0.5) * h).collect();
        Ok(CartesianGrid {
            n,
            half_width,
            h,
            centers,
            w: vec![h * h; n * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of cell centre along one axis.
    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    /// Coordinates of flat index `k = i * N + j` (row `i` is the x index).
    pub fn point(&self, k: usize) -> [f64; 2] {
        [self.centers[k / self.n], self.centers[k % self.n]]
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({"kind": "cartesian", "n": self.n, "half_width": self.half_width, "h": self.h})
    }
}

impl Quadrature for CartesianGrid {
    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Gauss-Legendre in z times uniform azimuth; weights sum to 1.
/// Flat index is `i * nphi + k` for ring `i` and azimuth `k`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    z: Vec<f64>,
    wz: Vec<f64>,
    phi: Vec<f64>,
    w: Vec<f64>,
}

impl SphereGrid {
    pub fn new(nz: usize, nphi: usize) -> Result<Self> {
        if nz < 2 || nphi < 1 {
            bail!(
                Domain,
                MODULE,
                "sphere grid needs nz >= 2 and nphi >= 1, got {nz} x {nphi}"
            );
        }
        let (z, w) = gauss_legendre(nz);
        let wz: Vec<f64> = w.iter().map(|w| 0.5 * w).collect();
        let phi: Vec<f64> = (0..nphi).map(|k| 2.0 * PI * k as f64 / nphi as f64).collect();
        let mut ww = Vec::with_capacity(nz * nphi);
        for wi in &wz {
            for _ in 0..nphi {
                ww.push(wi / nphi as f64);
            }
        }
        Ok(SphereGrid { z, wz, phi, w: ww })
    }

    /// Single-azimuth grid for axisymmetric fields.
    pub fn axisymmetric(nz: usize) -> Result<Self> {
        Self::new(nz, 1)
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn nphi(&self) -> usize {
        self.phi.len()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Ring weights (sum 1).
    pub fn ring_weights(&self) -> &[f64] {
        &self.wz
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Largest degree resolved by the Gauss rule.
    pub fn lmax(&self) -> usize {
        self.z.len() - 1
    }

    /// Largest order resolved by the azimuthal grid.
    pub fn mmax(&self) -> usize {
        ((self.phi.len().saturating_sub(1)) / 2).min(self.lmax())
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let nphi = self.phi.len();
        let z = self.z[idx / nphi];
        let phi = self.phi[idx % nphi];
        let s = (1.0 - z * z).max(0.0).sqrt();
        [s * phi.cos(), s * phi.sin(), z]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.w.len()).map(|i| self.point(i)).collect()
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({"kind": "sphere", "nz": self.nz(), "nphi": self.nphi()})
    }
}

impl Quadrature for SphereGrid {
    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Equispaced angles with weight 1/n each.
#[derive(Debug, Clone)]
pub struct CircleGrid {
    theta: Vec<f64>,
    w: Vec<f64>,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            bail!(Domain, MODULE, "circle grid needs n >= 4, got {n}");
        }
        Ok(CircleGrid {
            theta: (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect(),
            w: vec![1.0 / n as f64; n],
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

impl Quadrature for CircleGrid {
    fn weights(&self) -> &[f64] {
        &self.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(r: f64) -> f64 {
        1.0 / (PI * (1.0 + r * r).powi(2))
    }

    #[test]
    fn radial_constant_gives_disk_area() {
        for scheme in [RadialScheme::LogUniform, RadialScheme::Uniform] {
            let g = make_radial_grid(7.0, 512, scheme).unwrap();
            let ones = vec![1.0; g.len()];
            let a = integrate(&ones, &g).unwrap();
            assert!((a / (PI * 49.0) - 1.0).abs() < 1e-10, "{scheme:?}: {a}");
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn uniform_indicator_of_disk() {
        let g = make_radial_grid(10.0, 256, RadialScheme::Uniform).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&r| if r <= 10.0 { 1.0 } else { 0.0 }).collect();
        assert!((integrate(&v, &g).unwrap() - 100.0 * PI).abs() < 1e-8 * 100.0 * PI);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(make_radial_grid(10.0, 8, RadialScheme::Uniform).is_err());
        assert!(make_radial_grid(-1.0, 64, RadialScheme::LogUniform).is_err());
    }

    #[test]
    fn log_grid_first_node_follows_span() {
        let g = make_radial_grid(1000.0, 4096, RadialScheme::LogUniform).unwrap();
        assert!((g.r_min() / (1000.0 * (-DEFAULT_LOG_SPAN).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_h_has_unit_mass() {
        let g = make_radial_grid(1e3, 4096, RadialScheme::LogUniform).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&r| h(r)).collect();
        let m = integrate(&v, &g).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn radial_gaussian_integral() {
        // the log grid spreads its nodes over 12 decades, so it needs more of them
        for (scheme, n) in [(RadialScheme::LogUniform, 512), (RadialScheme::Uniform, 256)] {
            let g = make_radial_grid(8.0, n, scheme).unwrap();
            let v: Vec<f64> = g.nodes().iter().map(|&r| (-r * r).exp()).collect();
            let q = integrate(&v, &g).unwrap();
            assert!((q - PI).abs() < 1e-8, "{scheme:?}: {:e}", q - PI);
        }
    }

    #[test]
    fn cumulative_mass_of_h() {
        let g = make_radial_grid(1e3, 2048, RadialScheme::LogUniform).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&r| h(r)).collect();
        let m = g.cumulative(&v);
        for (i, &r) in g.nodes().iter().enumerate().step_by(97) {
            let exact = r * r / (1.0 + r * r);
            assert!((m[i] - exact).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn interpolation_is_accurate() {
        let g = make_radial_grid(50.0, 1024, RadialScheme::LogUniform).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&r| h(r)).collect();
        for r in [1e-3, 0.3, 1.0, 2.7, 40.0] {
            assert!((g.interpolate(&v, r) - h(r)).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_weights_and_moments() {
        let g = SphereGrid::new(16, 33).unwrap();
        let ones = vec![1.0; g.node_count()];
        assert!((integrate(&ones, &g).unwrap() - 1.0).abs() < 1e-12);
        let z2: Vec<f64> = g.points().iter().map(|p| p[2] * p[2]).collect();
        assert!((integrate(&z2, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let x2: Vec<f64> = g.points().iter().map(|p| p[0] * p[0]).collect();
        assert!((integrate(&x2, &g).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_polynomial_exactness() {
        let nz = 10;
        let g = SphereGrid::axisymmetric(nz).unwrap();
        for deg in 0..2 * nz as i32 {
            let v: Vec<f64> = g.z().iter().map(|z| z.powi(deg)).collect();
            let q = integrate(&v, &g).unwrap();
            let exact = if deg % 2 == 1 { 0.0 } else { 1.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn circle_weights_sum_to_one() {
        let g = CircleGrid::new(64).unwrap();
        assert_eq!(g.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let g = CircleGrid::new(8).unwrap();
        let e = integrate(&[1.0; 3], &g).unwrap_err();
        assert_eq!(e.kind, crate::error::ErrorKind::Dimension);
    }

    #[test]
    fn repeated_integration_is_bit_identical() {
        let g = SphereGrid::new(24, 48).unwrap();
        let v: Vec<f64> = g.points().iter().map(|p| (p[0] + 2.0 * p[2]).exp()).collect();
        let a = integrate(&v, &g).unwrap();
        let b = integrate(&v, &g).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
