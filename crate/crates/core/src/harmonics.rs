//! Legendre polynomials and real spherical harmonic transforms on
//! Gauss-Legendre x uniform-azimuth grids.
//!
//! Real harmonics use the 4-pi normalization, so that `int Y^2 dsigma = 1`
//! under the normalized measure. Order `m > 0` is the cosine part, `m < 0`
//! the sine part.

use crate::grids::SphereGrid;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Plain Legendre polynomials P_0..P_lmax at z.
pub fn legendre_table(lmax: usize, z: f64) -> Vec<f64> {
    let mut p = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = z;
    }
    for l in 2..=lmax {
        let lf = l as f64;
        p[l] = ((2.0 * lf - 1.0) * z * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
    }
    p
}

/// P_l and dP_l/dz for l = 0..lmax (valid for |z| < 1 and at the poles).
pub fn legendre_with_derivatives(lmax: usize, z: f64) -> (Vec<f64>, Vec<f64>) {
    let p = legendre_table(lmax, z);
    let mut d = vec![0.0; lmax + 1];
    // P'_l = l P_{l-1} + z P'_{l-1}
    for l in 1..=lmax {
        d[l] = l as f64 * p[l - 1] + z * d[l - 1];
    }
    (p, d)
}

/// Coefficients of a real field in the orthonormal real harmonic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoeffs {
    lmax: usize,
    data: Vec<f64>,
}

impl ShCoeffs {
    pub fn zeros(lmax: usize) -> Self {
        ShCoeffs {
            lmax,
            data: vec![0.0; (lmax + 1) * (lmax + 1)],
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        debug_assert!(m.unsigned_abs() as usize <= l);
        self.data[Self::flat(l, m)]
    }

    fn flat(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.data[Self::flat(l, m)] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Squared norm of the degree-l component.
    pub fn degree_power(&self, l: usize) -> f64 {
        let a = l * l;
        self.data[a..a + 2 * l + 1].iter().map(|c| c * c).sum()
    }

    /// `int |grad u|^2 dsigma = sum l(l+1) |a_lm|^2`.
    pub fn dirichlet(&self) -> f64 {
        let terms: Vec<f64> = (1..=self.lmax)
            .map(|l| (l * (l + 1)) as f64 * self.degree_power(l))
            .collect();
        crate::grids::quadrature::pairwise_sum(&terms)
    }

    /// `int grad u . grad v dsigma`.
    pub fn dirichlet_cross(&self, other: &ShCoeffs) -> f64 {
        let lmax = self.lmax.min(other.lmax);
        let terms: Vec<f64> = (1..=lmax)
            .map(|l| {
                let a = l * l;
                let s: f64 = (a..a + 2 * l + 1).map(|k| self.data[k] * other.data[k]).sum();
                (l * (l + 1)) as f64 * s
            })
            .collect();
        crate::grids::quadrature::pairwise_sum(&terms)
    }

    /// Multiply each degree-l block by `f(l)`.
    pub fn scale_degrees(&mut self, f: impl Fn(usize) -> f64) {
        for l in 0..=self.lmax {
            let a = l * l;
            let s = f(l);
            for c in &mut self.data[a..a + 2 * l + 1] {
                *c *= s;
            }
        }
    }

    /// Mean of the field under the normalized measure.
    pub fn mean(&self) -> f64 {
        self.data[0]
    }
}

/// Walks the normalized associated Legendre functions column by column.
struct AlfColumns {
    z: f64,
    s: f64,
    pmm: f64,
    m: usize,
}

impl AlfColumns {
    fn new(z: f64) -> Self {
        AlfColumns {
            z,
            s: (1.0 - z * z).max(0.0).sqrt(),
            pmm: 1.0,
            m: 0,
        }
    }

    /// Fill `out[l - m]` with Pbar_{l,m}(z) for l = m..=lmax, then advance m.
    fn next_column(&mut self, lmax: usize, out: &mut [f64]) {
        let m = self.m;
        let z = self.z;
        let mf = m as f64;
        out[0] = self.pmm;
        if m < lmax {
            out[1] = (2.0 * mf + 3.0).sqrt() * z * self.pmm;
        }
        for l in m + 2..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            out[l - m] = a * (z * out[l - m - 1] - b * out[l - m - 2]);
        }
        let next = m + 1;
        let factor = if next == 1 {
            3.0f64.sqrt()
        } else {
            ((2.0 * next as f64 + 1.0) / (2.0 * next as f64)).sqrt()
        };
        self.pmm *= factor * self.s;
        self.m = next;
    }
}

fn ring_fourier(grid: &SphereGrid, values: &[f64], mmax: usize) -> Vec<Vec<(f64, f64)>> {
    let nphi = grid.nphi();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nphi);
    let mut buf = vec![Complex64::new(0.0, 0.0); nphi];
    let mut out = Vec::with_capacity(grid.nz());
    for i in 0..grid.nz() {
        for k in 0..nphi {
            buf[k] = Complex64::new(values[i * nphi + k], 0.0);
        }
        fft.process(&mut buf);
        let inv = 1.0 / nphi as f64;
        out.push((0..=mmax).map(|m| (buf[m].re * inv, -buf[m].im * inv)).collect());
    }
    out
}

/// Harmonic analysis of grid values up to degree `lmax` (orders limited by
/// the azimuthal resolution).
pub fn analyze(grid: &SphereGrid, values: &[f64], lmax: usize) -> ShCoeffs {
    assert_eq!(values.len(), grid.nz() * grid.nphi());
    let mmax = grid.mmax().min(lmax);
    let fourier = ring_fourier(grid, values, mmax);
    let mut coeffs = ShCoeffs::zeros(lmax);
    let mut col = vec![0.0; lmax + 1];
    // accumulate ring by ring in fixed order
    for (i, (&z, &wz)) in grid.z().iter().zip(grid.ring_weights()).enumerate() {
        let mut alf = AlfColumns::new(z);
        for m in 0..=mmax {
            alf.next_column(lmax, &mut col);
            let (c, s) = fourier[i][m];
            for l in m..=lmax {
                let p = col[l - m] * wz;
                if m == 0 {
                    coeffs.data[ShCoeffs::flat(l, 0)] += p * c;
                } else {
                    coeffs.data[ShCoeffs::flat(l, m as i64)] += p * c;
                    coeffs.data[ShCoeffs::flat(l, -(m as i64))] += p * s;
                }
            }
        }
    }
    coeffs
}

/// Synthesis of grid values from coefficients.
pub fn synthesize(grid: &SphereGrid, coeffs: &ShCoeffs) -> Vec<f64> {
    let lmax = coeffs.lmax;
    let nphi = grid.nphi();
    let mmax = lmax.min(grid.mmax());
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(nphi);
    let mut out = vec![0.0; grid.nz() * nphi];
    let mut col = vec![0.0; lmax + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); nphi];
    for (i, &z) in grid.z().iter().enumerate() {
        let mut alf = AlfColumns::new(z);
        for b in buf.iter_mut() {
            *b = Complex64::new(0.0, 0.0);
        }
        for m in 0..=mmax {
            alf.next_column(lmax, &mut col);
            let mut c = 0.0;
            let mut s = 0.0;
            for l in m..=lmax {
                c += col[l - m] * coeffs.data[ShCoeffs::flat(l, m as i64)];
                if m > 0 {
                    s += col[l - m] * coeffs.data[ShCoeffs::flat(l, -(m as i64))];
                }
            }
            if m == 0 {
                buf[0] = Complex64::new(c, 0.0);
            } else {
                // value = Re sum (c - i s) e^{i m phi}
                buf[m] = Complex64::new(c, -s);
            }
        }
        ifft.process(&mut buf);
        for k in 0..nphi {
            out[i * nphi + k] = buf[k].re;
        }
    }
    out
}

/// Degree-by-degree components `u_l(omega)`, l = 0..=lmax.
pub fn evaluate_by_degree(coeffs: &ShCoeffs, omega: [f64; 3]) -> Vec<f64> {
    let lmax = coeffs.lmax;
    let z = omega[2].clamp(-1.0, 1.0);
    let phi = omega[1].atan2(omega[0]);
    let mut alf = AlfColumns::new(z);
    let mut col = vec![0.0; lmax + 1];
    let mut per = vec![0.0; lmax + 1];
    for m in 0..=lmax {
        alf.next_column(lmax, &mut col);
        let (sm, cm) = (m as f64 * phi).sin_cos();
        for l in m..=lmax {
            let mut v = coeffs.data[ShCoeffs::flat(l, m as i64)] * cm;
            if m > 0 {
                v += coeffs.data[ShCoeffs::flat(l, -(m as i64))] * sm;
            }
            per[l] += col[l - m] * v;
        }
    }
    per
}

/// Point evaluation of the harmonic series at a unit vector.
pub fn evaluate(coeffs: &ShCoeffs, omega: [f64; 3]) -> f64 {
    evaluate_by_degree(coeffs, omega).iter().sum()
}

/// Point evaluation at many unit vectors.
pub fn evaluate_many(coeffs: &ShCoeffs, points: &[[f64; 3]]) -> Vec<f64> {
    points.iter().map(|&p| evaluate(coeffs, p)).collect()
}

/// Plain Legendre coefficients of a zonal function from its ring values:
/// `f(z) = sum a_l P_l(z)`.
pub fn zonal_analyze(z: &[f64], wz: &[f64], values: &[f64], lmax: usize) -> Vec<f64> {
    let mut a = vec![0.0; lmax + 1];
    for ((&zi, &wi), &fi) in z.iter().zip(wz).zip(values) {
        let p = legendre_table(lmax, zi);
        for l in 0..=lmax {
            a[l] += wi * fi * p[l];
        }
    }
    for (l, al) in a.iter_mut().enumerate() {
        *al *= (2 * l + 1) as f64;
    }
    a
}

/// Evaluate `sum a_l P_l(z)`.
pub fn zonal_eval(a: &[f64], z: f64) -> f64 {
    let lmax = a.len().saturating_sub(1);
    let p = legendre_table(lmax, z);
    a.iter().zip(&p).map(|(a, p)| a * p).sum()
}

/// Evaluate `sum a_l P'_l(z)`.
pub fn zonal_eval_derivative(a: &[f64], z: f64) -> f64 {
    let lmax = a.len().saturating_sub(1);
    let (_, d) = legendre_with_derivatives(lmax, z);
    a.iter().zip(&d).map(|(a, d)| a * d).sum()
}

/// Dirichlet energy of a zonal function given plain Legendre coefficients.
pub fn zonal_dirichlet(a: &[f64]) -> f64 {
    let terms: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(l, al)| (l * (l + 1)) as f64 * al * al / (2 * l + 1) as f64)
        .collect();
    crate::grids::quadrature::pairwise_sum(&terms)
}

/// Convert plain Legendre coefficients of a zonal function into the
/// orthonormal real basis (only m = 0 entries are nonzero).
pub fn zonal_to_sh(a: &[f64]) -> ShCoeffs {
    let lmax = a.len() - 1;
    let mut c = ShCoeffs::zeros(lmax);
    for (l, al) in a.iter().enumerate() {
        c.set(l, 0, al / ((2 * l + 1) as f64).sqrt());
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{integrate, SphereGrid};

    #[test]
    fn basis_is_orthonormal() {
        let g = SphereGrid::new(12, 25).unwrap();
        let lmax = 8;
        let pts = g.points();
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                let mut c = ShCoeffs::zeros(lmax);
                c.set(l, m, 1.0);
                let v = synthesize(&g, &c);
                let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
                assert!((integrate(&v2, &g).unwrap() - 1.0).abs() < 1e-12, "({l},{m})");
                let back = analyze(&g, &v, lmax);
                for (k, x) in back.as_slice().iter().enumerate() {
                    let expect = if k == ShCoeffs::flat(l, m) { 1.0 } else { 0.0 };
                    assert!((x - expect).abs() < 1e-12);
                }
                let e = evaluate(&c, pts[37]);
                assert!((e - v[37]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn known_low_degree_harmonics() {
        let g = SphereGrid::new(8, 17).unwrap();
        let v: Vec<f64> = g.points().iter().map(|p| p[2]).collect();
        let c = analyze(&g, &v, 4);
        assert!((c.get(1, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((c.dirichlet() - 2.0 / 3.0).abs() < 1e-13);
        let v: Vec<f64> = g.points().iter().map(|p| p[0] * p[1]).collect();
        let c = analyze(&g, &v, 4);
        assert!(c.degree_power(2) > 0.0);
        assert!((c.dirichlet() - 6.0 * c.degree_power(2)).abs() < 1e-14);
    }

    #[test]
    fn zonal_round_trip() {
        let g = SphereGrid::axisymmetric(20).unwrap();
        let f = |z: f64| (0.3 * z).exp() + z * z;
        let v: Vec<f64> = g.z().iter().map(|&z| f(z)).collect();
        let a = zonal_analyze(g.z(), g.ring_weights(), &v, 19);
        for z in [-0.9, -0.1, 0.4, 0.99] {
            assert!((zonal_eval(&a, z) - f(z)).abs() < 1e-13);
        }
        let d = zonal_eval_derivative(&a, 0.4);
        assert!((d - (0.3 * (0.12f64).exp() + 0.8)).abs() < 1e-12);
    }

    #[test]
    fn zonal_and_general_dirichlet_agree() {
        let g = SphereGrid::new(24, 49).unwrap();
        let f = |z: f64| (1.0 + 0.4 * z).ln();
        let v: Vec<f64> = g.points().iter().map(|p| f(p[2])).collect();
        let c = analyze(&g, &v, 23);
        let rings: Vec<f64> = g.z().iter().map(|&z| f(z)).collect();
        let a = zonal_analyze(g.z(), g.ring_weights(), &rings, 23);
        assert!((c.dirichlet() - zonal_dirichlet(&a)).abs() < 1e-13);
        let sh = zonal_to_sh(&a);
        assert!((sh.get(3, 0) - c.get(3, 0)).abs() < 1e-14);
    }
}
