//! Poincaré-disc geometry.
//!
//! Conventions used throughout the crate: the hyperbolic metric is
//! `2|dz| / (1 − |z|²)` (curvature −1), so `d(0, t) = log((1 + t) / (1 − t))`
//! and the Lobachevskian ball `D(0, R)` is the Euclidean disc of radius
//! `tanh(R / 2)`.
//!
//! The Blaschke factor is implemented as `(z − q) / (1 − q̄ z)`. Some texts
//! write the denominator as `1 − z̄ q`; that variant differs by a unimodular
//! factor and only moduli enter the formulas built on top of it.

mod quadrature;

pub use quadrature::{
    adaptive_integrate, gauss_legendre, polar_quadrature, hyperbolic_quadrature,
    QuadratureGrid, ReferenceMeasure, Region,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {re} + {im}i lies outside the open unit disc")]
    OutsideDisc { re: f64, im: f64 },
    #[error("hyperbolic radius must be nonnegative and finite, got {0}")]
    BadRadius(f64),
    #[error("region {0} is not strictly inside the unit disc")]
    RegionTouchesBoundary(String),
    #[error("quadrature resolution must be at least 1 (radial {radial}, angular {angular})")]
    BadResolution { radial: usize, angular: usize },
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    QuadratureFailed { tol: f64, estimate: f64, error: f64 },
}

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point(Complex64);

impl Point {
    pub fn new(z: Complex64) -> Result<Self, GeomError> {
        if z.norm_sqr() < 1.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(Point(z))
        } else {
            Err(GeomError::OutsideDisc { re: z.re, im: z.im })
        }
    }

    pub fn from_re_im(re: f64, im: f64) -> Result<Self, GeomError> {
        Self::new(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Result<Self, GeomError> {
        Self::new(Complex64::new(x, 0.0))
    }

    pub const fn origin() -> Self {
        Point(Complex64::new(0.0, 0.0))
    }

    #[inline]
    pub fn z(self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.0.norm()
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }
}

impl TryFrom<[f64; 2]> for Point {
    type Error = GeomError;
    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Point::from_re_im(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.0.re, p.0.im]
    }
}

impl From<Point> for Complex64 {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// Disc automorphism `φ_q(z) = (z − q) / (1 − q̄ z)` sending `q` to the origin.
#[inline]
pub fn blaschke(q: Point, z: Point) -> Complex64 {
    blaschke_raw(q.0, z.0)
}

#[inline]
pub(crate) fn blaschke_raw(q: Complex64, z: Complex64) -> Complex64 {
    (z - q) / (Complex64::new(1.0, 0.0) - q.conj() * z)
}

/// `|φ_q(z)|²` computed without cancellation near `|φ| → 1`:
/// `1 − |φ_q(z)|² = (1 − |q|²)(1 − |z|²) / |1 − q̄ z|²`.
#[inline]
pub(crate) fn one_minus_pseudo_sq(q: Complex64, z: Complex64) -> f64 {
    let den = (Complex64::new(1.0, 0.0) - q.conj() * z).norm_sqr();
    (1.0 - q.norm_sqr()) * (1.0 - z.norm_sqr()) / den
}

/// Hyperbolic distance `2 artanh |φ_z(w)|`.
pub fn hyp_dist(z: Point, w: Point) -> f64 {
    let m = blaschke(z, w).norm();
    // log((1+m)/(1-m)) with 1-m computed from the cancellation-free identity
    let one_minus_m2 = one_minus_pseudo_sq(z.0, w.0);
    if m < 0.5 {
        2.0 * m.atanh()
    } else {
        ((1.0 + m) * (1.0 + m) / one_minus_m2).ln()
    }
}

/// Lobachevskian ball `D(q, R)` together with its Euclidean description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicBall {
    pub center: Point,
    pub radius_hyp: f64,
    pub euclid_center: Complex64,
    pub euclid_radius: f64,
}

impl HyperbolicBall {
    /// Pseudo-hyperbolic radius `tanh(R/2)`.
    #[inline]
    pub fn pseudo_radius(&self) -> f64 {
        (0.5 * self.radius_hyp).tanh()
    }

    /// Membership through the Blaschke factor: `|φ_q(z)| < tanh(R/2)`.
    pub fn contains(&self, z: Point) -> bool {
        blaschke(self.center, z).norm() < self.pseudo_radius()
    }

    /// Membership through the Euclidean center and radius.
    pub fn contains_euclid(&self, z: Point) -> bool {
        (z.z() - self.euclid_center).norm() < self.euclid_radius
    }

    /// Largest `|z|` over the closed ball.
    pub fn max_modulus(&self) -> f64 {
        self.euclid_center.norm() + self.euclid_radius
    }
}

/// The ball `D(q, R)`.
pub fn ball(q: Point, radius_hyp: f64) -> Result<HyperbolicBall, GeomError> {
    if !(radius_hyp >= 0.0 && radius_hyp.is_finite()) {
        return Err(GeomError::BadRadius(radius_hyp));
    }
    let rho = (0.5 * radius_hyp).tanh();
    let q2 = q.norm_sqr();
    let den = 1.0 - rho * rho * q2;
    Ok(HyperbolicBall {
        center: q,
        radius_hyp,
        euclid_center: q.z() * ((1.0 - rho * rho) / den),
        euclid_radius: rho * (1.0 - q2) / den,
    })
}

/// Largest pseudo-hyperbolic radius `ρ` with `D(q, 2 artanh ρ) ⊂ {|z| ≤ s}`.
///
/// The point of the ball farthest from the origin has modulus
/// `(|q| + ρ) / (1 + |q| ρ)`; solving for `ρ` gives `|φ_{|q|}(s)|`.
pub fn max_pseudo_radius_within(q: Point, s: f64) -> f64 {
    let a = q.norm();
    if s <= a {
        0.0
    } else {
        (s - a) / (1.0 - s * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, rmax: f64) -> Point {
        let r = rmax * rng.gen::<f64>().sqrt();
        let t = rng.gen::<f64>() * std::f64::consts::TAU;
        Point::new(Complex64::from_polar(r, t)).unwrap()
    }

    #[test]
    fn point_rejects_boundary() {
        assert!(Point::real(1.0).is_err());
        assert!(Point::from_re_im(0.8, 0.6).is_err());
        assert!(Point::from_re_im(f64::NAN, 0.0).is_err());
        assert!(Point::real(0.999).is_ok());
    }

    #[test]
    fn blaschke_values() {
        let q = Point::from_re_im(0.3, -0.2).unwrap();
        assert_eq!(blaschke(q, q), Complex64::new(0.0, 0.0));
        let z = Point::from_re_im(0.1, 0.7).unwrap();
        assert_eq!(blaschke(Point::origin(), z), z.z());
        let v = blaschke(Point::real(0.5).unwrap(), Point::real(0.8).unwrap());
        assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn blaschke_modulus_matches_conjugate_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q = random_point(&mut rng, 0.99);
            let z = random_point(&mut rng, 0.99);
            let ours = blaschke(q, z).norm();
            let other = ((z.z() - q.z()) / (1.0 - z.z().conj() * q.z())).norm();
            assert_abs_diff_eq!(ours, other, epsilon = 1e-12);
        }
    }

    #[test]
    fn blaschke_is_an_involution_up_to_sign() {
        // φ_q(φ_q(z)) = z holds for the orientation (q − z)/(1 − q̄ z); ours
        // differs by a sign, so φ_q ∘ φ_{−q} is the identity.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let q = random_point(&mut rng, 0.95);
            let z = random_point(&mut rng, 0.95);
            let w = Point::new(blaschke(q, z)).unwrap();
            let minus_q = Point::new(-q.z()).unwrap();
            let back = blaschke(minus_q, w);
            assert!((back - z.z()).norm() < 1e-12);
        }
    }

    #[test]
    fn distance_examples() {
        let z = Point::from_re_im(0.4, 0.1).unwrap();
        assert_eq!(hyp_dist(z, z), 0.0);
        assert_abs_diff_eq!(
            hyp_dist(Point::origin(), Point::real(0.5).unwrap()),
            3f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn distance_is_mobius_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let a = random_point(&mut rng, 0.9);
            let z = random_point(&mut rng, 0.9);
            let w = random_point(&mut rng, 0.9);
            let d0 = hyp_dist(z, w);
            let d1 = hyp_dist(
                Point::new(blaschke(a, z)).unwrap(),
                Point::new(blaschke(a, w)).unwrap(),
            );
            assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0), "{d0} vs {d1}");
        }
    }

    #[test]
    fn ball_examples() {
        let b = ball(Point::origin(), 1.3).unwrap();
        assert_eq!(b.euclid_center, Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(b.euclid_radius, (0.65f64).tanh(), epsilon = 1e-15);
        let b = ball(Point::origin(), 3f64.ln()).unwrap();
        assert_abs_diff_eq!(b.euclid_radius, 0.5, epsilon = 1e-15);

        let q = Point::real(0.6).unwrap();
        let b = ball(q, 1.0).unwrap();
        assert!(b.contains(q));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let z = random_point(&mut rng, 0.99);
            assert_eq!(b.contains(z), hyp_dist(q, z) < 1.0);
        }
        assert!(ball(q, -0.1).is_err());
        assert!(ball(q, f64::INFINITY).is_err());
    }

    #[test]
    fn ball_euclid_and_blaschke_membership_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        for _ in 0..20_000 {
            let q = random_point(&mut rng, 0.9);
            let r = 4.0 * rng.gen::<f64>();
            let b = ball(q, r).unwrap();
            assert!(b.max_modulus() < 1.0);
            let z = random_point(&mut rng, 0.999);
            let m = blaschke(q, z).norm();
            if (m - b.pseudo_radius()).abs() < 1e-12 {
                continue;
            }
            assert_eq!(b.contains(z), b.contains_euclid(z));
            checked += 1;
        }
        assert!(checked > 19_000);
    }

    #[test]
    fn max_pseudo_radius_fits_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let q = random_point(&mut rng, 0.9);
            let s = 0.95;
            let rho = max_pseudo_radius_within(q, s);
            if rho == 0.0 {
                continue;
            }
            let b = ball(q, 2.0 * rho.atanh()).unwrap();
            assert!((b.max_modulus() - s).abs() < 1e-12);
        }
    }
}
