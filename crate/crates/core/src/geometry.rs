//! Stereographic projection, the isometry T between L^1(R^2) and L^1(S^2),
//! and conformal maps of S^2 represented as Lorentz matrices acting on the
//! null cone {(1, omega)}.

use crate::error::{bail, Result};
use crate::functionals::fields::{PlanarDensity, RadialDensity, SphereField};
use crate::grids::SphereGrid;
use crate::harmonics;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const MODULE: &str = "geometry";

/// Largest dilation parameter accepted by conformal maps and searches.
pub const T_CAP: f64 = 20.0;

/// Image of a sphere point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanePoint {
    Finite([f64; 2]),
    Infinity,
}

fn check_unit(omega: [f64; 3]) -> Result<()> {
    let n = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if !((n - 1.0).abs() <= 1e-10) {
        bail!(Domain, MODULE, "expected a unit vector, |omega| = {n}");
    }
    Ok(())
}

/// `(omega_1, omega_2) / (1 + omega_3)`; the south pole maps to infinity.
pub fn stereo_forward(omega: [f64; 3]) -> Result<PlanePoint> {
    check_unit(omega)?;
    let d = 1.0 + omega[2];
    if d <= 0.0 {
        return Ok(PlanePoint::Infinity);
    }
    Ok(PlanePoint::Finite([omega[0] / d, omega[1] / d]))
}

/// Inverse projection `(2x, 1 - |x|^2) / (1 + |x|^2)`.
pub fn stereo_inverse(x: [f64; 2]) -> [f64; 3] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let d = 1.0 + r2;
    [2.0 * x[0] / d, 2.0 * x[1] / d, (1.0 - r2) / d]
}

/// Residual of the chordal-distance identity
/// `|S^-1 x - S^-1 x'|^2 = 4 |x - x'|^2 / ((1 + |x|^2)(1 + |x'|^2))`.
pub fn chordal_identity_check(x: [f64; 2], xp: [f64; 2]) -> f64 {
    let a = stereo_inverse(x);
    let b = stereo_inverse(xp);
    let lhs: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
    let dx2 = (x[0] - xp[0]).powi(2) + (x[1] - xp[1]).powi(2);
    let rhs = 4.0 * dx2 / ((1.0 + x[0] * x[0] + x[1] * x[1]) * (1.0 + xp[0] * xp[0] + xp[1] * xp[1]));
    (lhs - rhs).abs()
}

/// `|S(omega)|^2` as a function of the height `z` on the sphere.
pub fn radius_squared_of_height(z: f64) -> f64 {
    (1.0 - z) / (1.0 + z)
}

/// Factor of the lift: `T rho(omega) = lift_factor(z) * rho(S(omega))`.
pub fn lift_factor(z: f64) -> f64 {
    4.0 * PI / ((1.0 + z) * (1.0 + z))
}

/// Lift of a planar density given pointwise.
pub fn lift_t_fn(grid: Arc<SphereGrid>, rho: impl Fn([f64; 2]) -> f64) -> SphereField {
    SphereField::from_fn(grid, |w| {
        let d = 1.0 + w[2];
        lift_factor(w[2]) * rho([w[0] / d, w[1] / d])
    })
}

/// Lift of a radial density (interpolated in the radial line variable).
pub fn lift_t_radial(rho: &RadialDensity, grid: Arc<SphereGrid>) -> SphereField {
    let g = rho.grid();
    SphereField::from_zonal(grid, |z| {
        let r = radius_squared_of_height(z).sqrt();
        lift_factor(z) * g.interpolate(rho.values(), r).max(0.0)
    })
}

/// Lift of a Cartesian density (bilinear interpolation, zero off the grid).
pub fn lift_t_planar(rho: &PlanarDensity, grid: Arc<SphereGrid>) -> SphereField {
    lift_t_fn(grid, |x| rho.interpolate(x).max(0.0))
}

/// A point of the optimizer manifold on S^2: dilation `t >= 0` along `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalParams {
    pub t: f64,
    pub n: [f64; 3],
}

impl ConformalParams {
    /// Normalizes `n` and folds negative `t` using `(t, n) ~ (-t, -n)`.
    pub fn new(t: f64, n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !(norm > 0.0) || !t.is_finite() {
            bail!(Parameter, MODULE, "conformal parameters need finite t and nonzero axis");
        }
        let mut n = [n[0] / norm, n[1] / norm, n[2] / norm];
        let mut t = t;
        if t < 0.0 {
            t = -t;
            n = [-n[0], -n[1], -n[2]];
        }
        if t > T_CAP {
            bail!(Parameter, MODULE, "t = {t} exceeds the cap {T_CAP}");
        }
        Ok(ConformalParams { t, n })
    }

    pub fn identity() -> Self {
        ConformalParams {
            t: 0.0,
            n: [0.0, 0.0, 1.0],
        }
    }

    /// From `p = t n`.
    pub fn from_vector(p: [f64; 3]) -> Result<Self> {
        let t = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if t == 0.0 {
            return Ok(Self::identity());
        }
        Self::new(t, p)
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.t * self.n[0], self.t * self.n[1], self.t * self.n[2]]
    }
}

/// A point of the S^1 optimizer family (normalized Poisson kernels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub r: f64,
    pub alpha: f64,
}

/// Largest Poisson-kernel radius accepted in searches.
pub const R_CAP: f64 = 1.0 - 1e-6;

impl CircleParams {
    pub fn new(r: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            bail!(Parameter, MODULE, "Poisson-kernel radius must lie in [0, 1), got {r}");
        }
        Ok(CircleParams {
            r,
            alpha: alpha.rem_euclid(2.0 * PI),
        })
    }
}

/// Element of SO+(3,1) acting on S^2 through the null cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentz(pub [[f64; 4]; 4]);

impl Lorentz {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Lorentz(m)
    }

    /// Pure boost with rapidity `t` along unit vector `n`.
    pub fn boost(t: f64, n: [f64; 3]) -> Self {
        let (c, s) = (t.cosh(), t.sinh());
        let mut m = [[0.0; 4]; 4];
        m[0][0] = c;
        for i in 0..3 {
            m[0][i + 1] = s * n[i];
            m[i + 1][0] = s * n[i];
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                m[i + 1][j + 1] = id + (c - 1.0) * n[i] * n[j];
            }
        }
        Lorentz(m)
    }

    pub fn from_params(p: &ConformalParams) -> Self {
        Self::boost(p.t, p.n)
    }

    /// Rotation by `angle` about unit `axis` (Rodrigues).
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let k = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, c) = angle.sin_cos();
        let mut m = Self::identity().0;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                let cross = match (i, j) {
                    (0, 1) => -k[2],
                    (0, 2) => k[1],
                    (1, 0) => k[2],
                    (1, 2) => -k[0],
                    (2, 0) => -k[1],
                    (2, 1) => k[0],
                    _ => 0.0,
                };
                m[i + 1][j + 1] = c * id + s * cross + (1.0 - c) * k[i] * k[j];
            }
        }
        Lorentz(m)
    }

    pub fn compose(&self, other: &Lorentz) -> Lorentz {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Lorentz(m)
    }

    /// Image of `omega` and the log of the area Jacobian at `omega`.
    pub fn apply(&self, omega: [f64; 3]) -> ([f64; 3], f64) {
        let v = [1.0, omega[0], omega[1], omega[2]];
        let mut y = [0.0; 4];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..4).map(|k| self.0[i][k] * v[k]).sum();
        }
        let mut w = [y[1] / y[0], y[2] / y[0], y[3] / y[0]];
        let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        for x in &mut w {
            *x /= n;
        }
        (w, -2.0 * y[0].ln())
    }

    /// Pure-boost factor `B` in the decomposition `self = B R`.
    pub fn boost_part(&self) -> ConformalParams {
        let c = self.0[0][0].max(1.0);
        let t = c.acosh();
        if t < 1e-300 {
            return ConformalParams::identity();
        }
        let s = t.sinh();
        let n = [self.0[1][0] / s, self.0[2][0] / s, self.0[3][0] / s];
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        ConformalParams {
            t,
            n: [n[0] / norm, n[1] / norm, n[2] / norm],
        }
    }
}

/// `U = u o tau + log J_tau` for a general Lorentz matrix. Off-grid values
/// of `u` come from its harmonic expansion (Legendre series when `u` is
/// axisymmetric).
pub fn push_lorentz(u: &SphereField, lambda: &Lorentz) -> SphereField {
    let grid = u.grid_arc();
    let zonal = u.zonal_coeffs();
    // boosts along the z axis composed with rotations about it keep zonal
    // functions zonal
    let m = &lambda.0;
    let axis_preserving = [m[0][1], m[0][2], m[1][0], m[2][0], m[1][3], m[2][3], m[3][1], m[3][2]]
        .iter()
        .all(|x| x.abs() < 1e-15);
    match zonal {
        Some(a) if axis_preserving => SphereField::from_zonal(grid, |z| {
            let (w, logj) = lambda.apply([(1.0 - z * z).max(0.0).sqrt(), 0.0, z]);
            harmonics::zonal_eval(&a, w[2]) + logj
        }),
        Some(a) => SphereField::from_fn(grid, |p| {
            let (w, logj) = lambda.apply(p);
            harmonics::zonal_eval(&a, w[2]) + logj
        }),
        None => {
            let c = u.spectrum();
            SphereField::from_fn(grid, |p| {
                let (w, logj) = lambda.apply(p);
                harmonics::evaluate(&c, w) + logj
            })
        }
    }
}

/// Push of a closed-form function: `U = f o tau + log J_tau`.
pub fn push_fn(grid: Arc<SphereGrid>, f: impl Fn([f64; 3]) -> f64, lambda: &Lorentz) -> SphereField {
    SphereField::from_fn(grid, |p| {
        let (w, logj) = lambda.apply(p);
        f(w) + logj
    })
}

/// `U_tau = u o tau + log J_tau` for the boost with parameters `p`.
pub fn conformal_push(u: &SphereField, p: &ConformalParams) -> Result<SphereField> {
    if !(p.t <= T_CAP) {
        bail!(Parameter, MODULE, "t = {} exceeds the cap {T_CAP}", p.t);
    }
    if p.t == 0.0 {
        return Ok(u.clone());
    }
    Ok(push_lorentz(u, &Lorentz::from_params(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{integrate, make_radial_grid, RadialScheme};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n < 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn stereo_examples() {
        assert_eq!(stereo_forward([0.0, 0.0, 1.0]).unwrap(), PlanePoint::Finite([0.0, 0.0]));
        assert_eq!(stereo_forward([1.0, 0.0, 0.0]).unwrap(), PlanePoint::Finite([1.0, 0.0]));
        assert_eq!(stereo_forward([0.0, 0.0, -1.0]).unwrap(), PlanePoint::Infinity);
        assert!(stereo_forward([0.0, 0.0, 1.1]).is_err());
    }

    #[test]
    fn stereo_round_trip_and_norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            match stereo_forward(stereo_inverse(x)).unwrap() {
                PlanePoint::Finite(y) => assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12),
                PlanePoint::Infinity => panic!(),
            }
            let w = random_unit(&mut rng);
            if let PlanePoint::Finite(y) = stereo_forward(w).unwrap() {
                let r2 = y[0] * y[0] + y[1] * y[1];
                assert!((r2 * (1.0 + w[2]) - (1.0 - w[2])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn chordal_identity() {
        assert_eq!(chordal_identity_check([0.3, 0.4], [0.3, 0.4]), 0.0);
        assert!(chordal_identity_check([1.0, 0.0], [0.0, 0.0]) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            assert!(chordal_identity_check(x, y) < 1e-10);
        }
    }

    #[test]
    fn lift_of_h_is_constant() {
        let grid = Arc::new(SphereGrid::new(16, 8).unwrap());
        let h = |x: [f64; 2]| 1.0 / (PI * (1.0 + x[0] * x[0] + x[1] * x[1]).powi(2));
        let f = lift_t_fn(grid.clone(), h);
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let f2 = lift_t_fn(grid, |x| 2.0 * h(x));
        assert!(f2.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn lift_preserves_mass_of_radial_density() {
        let rg = Arc::new(make_radial_grid(40.0, 2048, RadialScheme::LogUniform).unwrap());
        let rho = RadialDensity::from_fn(rg, |r| (-r * r / 2.0).exp() / (2.0 * PI)).unwrap();
        let grid = Arc::new(SphereGrid::axisymmetric(400).unwrap());
        let f = lift_t_radial(&rho, grid);
        assert!((f.integral() - 1.0).abs() < 1e-6, "{}", f.integral());
        assert!(f.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn push_of_zero_is_sphere_optimizer() {
        let grid = Arc::new(SphereGrid::new(20, 41).unwrap());
        let n = [0.48, -0.6, 0.64];
        let p = ConformalParams::new(0.8, n).unwrap();
        let u = conformal_push(&SphereField::zero(grid.clone()), &p).unwrap();
        for (i, v) in u.values().iter().enumerate() {
            let w = grid.point(i);
            let dot = n[0] * w[0] + n[1] * w[1] + n[2] * w[2];
            let expect = -2.0 * (0.8f64.cosh() + 0.8f64.sinh() * dot).ln();
            assert!((v - expect).abs() < 1e-12);
        }
        let same = conformal_push(&u, &ConformalParams::new(0.0, n).unwrap()).unwrap();
        assert_eq!(same.values(), u.values());
    }

    #[test]
    fn push_preserves_exponential_integral() {
        let grid = Arc::new(SphereGrid::new(48, 97).unwrap());
        let u = SphereField::from_fn(grid, |w| 0.3 * w[0] - 0.2 * w[1] * w[2] + 0.1 * w[2]);
        let p = ConformalParams::new(1.0, [0.0, 0.6, 0.8]).unwrap();
        let v = conformal_push(&u, &p).unwrap();
        let a = u.log_exp_integral().exp();
        let b = v.log_exp_integral().exp();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn boosts_compose_and_invert() {
        let n = [0.0, 0.6, 0.8];
        let b = Lorentz::boost(0.7, n).compose(&Lorentz::boost(0.7, [0.0, -0.6, -0.8]));
        for i in 0..4 {
            for j in 0..4 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((b.0[i][j] - id).abs() < 1e-14);
            }
        }
        let r = Lorentz::rotation([1.0, 2.0, 0.5], 0.9);
        let m = Lorentz::boost(1.3, n).compose(&r);
        let p = m.boost_part();
        assert!((p.t - 1.3).abs() < 1e-12);
        for i in 0..3 {
            assert!((p.n[i] - n[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_energy_rotation_invariant() {
        let grid = Arc::new(SphereGrid::new(16, 33).unwrap());
        let u = SphereField::from_fn(grid.clone(), |w| w[0] * w[1] + 0.3 * w[2].powi(3) - 0.2 * w[1]);
        let rot = Lorentz::rotation([0.3, -1.0, 0.4], 1.1);
        let v = push_lorentz(&u, &rot);
        let (a, b) = (u.spectrum().dirichlet(), v.spectrum().dirichlet());
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    /// Planar form of the Onofri functional for a zonal u:
    /// (1/16 pi) int (|grad f|^2 - |grad phi|^2) dx with f = u o S^-1 + phi.
    fn planar_onofri_form(du: impl Fn(f64) -> f64) -> f64 {
        let g = make_radial_grid(1e4, 8192, RadialScheme::LogUniform).unwrap();
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| {
                let d = 1.0 + r * r;
                let z = (1.0 - r * r) / d;
                let dz_dr = -4.0 * r / (d * d);
                let gu = du(z) * dz_dr;
                let gphi = -4.0 * r / d;
                gu * gu + 2.0 * gu * gphi
            })
            .collect();
        integrate(&vals, &g).unwrap() / (16.0 * PI)
    }

    #[test]
    fn sphere_plane_onofri_correspondence() {
        // u(z) = z + 0.3 P_2(z) - 0.1 z^3; south pole value u(-1)
        let u = |z: f64| z + 0.3 * 0.5 * (3.0 * z * z - 1.0) - 0.1 * z.powi(3);
        let du = |z: f64| 1.0 + 0.9 * z - 0.3 * z * z;
        let grid = Arc::new(SphereGrid::axisymmetric(32).unwrap());
        let f = SphereField::from_zonal(grid, u);
        let a = f.zonal_coeffs().unwrap();
        let sphere_side = 0.25 * harmonics::zonal_dirichlet(&a) + f.integral() - u(-1.0);
        let plane_side = planar_onofri_form(du);
        assert!((sphere_side - plane_side).abs() < 1e-3, "{sphere_side} vs {plane_side}");
    }
}
