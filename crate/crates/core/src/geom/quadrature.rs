use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GeomError, Point};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

#[allow(clippy::excessive_precision)]
const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WEIGHTS[7];
    let mut gauss = fc * GAUSS7_WEIGHTS[3];
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let s = f(c - dx) + f(c + dx);
        kron += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// Returns `(value, error_estimate)`; fails if the error estimate is still
/// above `max(abs_tol, rel_tol·|value|)` after the subdivision budget.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), GeomError> {
    const MAX_SEGMENTS: usize = 4000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(GeomError::QuadratureFailed { tol: abs_tol.max(rel_tol * total.abs()), estimate: total, error: err });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        total += v1 + v2 - seg.value;
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        if err < 0.0 {
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    // re-sum to shed accumulated rounding from the incremental updates
    let total: f64 = heap.iter().map(|s| s.value).sum();
    Ok((total, err))
}

/// Integration region strictly inside the unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Disc { center: Complex64, radius: f64 },
    AnnularSector {
        center: Complex64,
        r_inner: f64,
        r_outer: f64,
        theta_start: f64,
        theta_end: f64,
    },
}

impl Region {
    pub fn disc(center: Complex64, radius: f64) -> Self {
        Region::Disc { center, radius }
    }

    pub fn centered_disc(radius: f64) -> Self {
        Region::Disc { center: Complex64::new(0.0, 0.0), radius }
    }

    pub fn annulus(center: Complex64, r_inner: f64, r_outer: f64) -> Self {
        Region::AnnularSector { center, r_inner, r_outer, theta_start: 0.0, theta_end: TAU }
    }

    fn polar(&self) -> (Complex64, f64, f64, f64, f64) {
        match *self {
            Region::Disc { center, radius } => (center, 0.0, radius, 0.0, TAU),
            Region::AnnularSector { center, r_inner, r_outer, theta_start, theta_end } => {
                (center, r_inner, r_outer, theta_start, theta_end)
            }
        }
    }

    pub fn center(&self) -> Complex64 {
        self.polar().0
    }

    /// Largest modulus of a point in the closed region (upper bound for sectors).
    pub fn max_modulus(&self) -> f64 {
        let (c, _, r_out, _, _) = self.polar();
        c.norm() + r_out
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let (c, r_in, r_out, t0, t1) = self.polar();
        let d = z - c;
        let r = d.norm();
        if !(r < r_out && r >= r_in) {
            return false;
        }
        if t1 - t0 >= TAU {
            return true;
        }
        let t = (d.arg() - t0).rem_euclid(TAU);
        t < t1 - t0
    }

    /// Euclidean area.
    pub fn area(&self) -> f64 {
        let (_, r_in, r_out, t0, t1) = self.polar();
        0.5 * (t1 - t0).min(TAU) * (r_out * r_out - r_in * r_in)
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let (c, r_in, r_out, t0, t1) = self.polar();
        let ok = r_in >= 0.0
            && r_out > r_in
            && t1 > t0
            && c.re.is_finite()
            && c.im.is_finite()
            && c.norm() + r_out < 1.0;
        if ok {
            Ok(())
        } else {
            Err(GeomError::RegionTouchesBoundary(format!("{self:?}")))
        }
    }
}

/// Measure that quadrature weights integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMeasure {
    /// Euclidean area `dA`.
    Lebesgue,
    /// `dA / (π (1 − |q|²)²)`, the diagonal of the Bergman kernel times `dA`.
    Hyperbolic,
}

impl ReferenceMeasure {
    #[inline]
    pub fn density(self, z: Complex64) -> f64 {
        match self {
            ReferenceMeasure::Lebesgue => 1.0,
            ReferenceMeasure::Hyperbolic => {
                let t = 1.0 - z.norm_sqr();
                1.0 / (PI * t * t)
            }
        }
    }
}

/// Tensor-product polar rule over a [`Region`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub region: Region,
    pub measure: ReferenceMeasure,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Σ wᵢ f(zᵢ).
    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }
}

/// Gauss–Legendre in the radius about the region center, midpoint rule in the
/// angle (spectrally accurate for full turns), density folded into weights.
pub fn polar_quadrature(
    region: Region,
    n_radial: usize,
    n_angular: usize,
    measure: ReferenceMeasure,
) -> Result<QuadratureGrid, GeomError> {
    if n_radial == 0 || n_angular == 0 {
        return Err(GeomError::BadResolution { radial: n_radial, angular: n_angular });
    }
    region.validate()?;
    let (c, r_in, r_out, t0, t1) = region.polar();
    let span = (t1 - t0).min(TAU);
    let (gx, gw) = gauss_legendre(n_radial);
    let half = 0.5 * (r_out - r_in);
    let mid = 0.5 * (r_out + r_in);
    let dt = span / n_angular as f64;
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    for (x, w) in gx.iter().zip(&gw) {
        let s = mid + half * x;
        let radial_weight = w * half * s;
        for j in 0..n_angular {
            let theta = t0 + (j as f64 + 0.5) * dt;
            let z = c + Complex64::from_polar(s, theta);
            nodes.push(Point::new(z)?);
            weights.push(radial_weight * dt * measure.density(z));
        }
    }
    Ok(QuadratureGrid { nodes, weights, region, measure, n_radial, n_angular })
}

/// [`polar_quadrature`] against the hyperbolic reference measure
/// `dA / (π (1 − |q|²)²)`.
pub fn hyperbolic_quadrature(
    region: Region,
    n_radial: usize,
    n_angular: usize,
) -> Result<QuadratureGrid, GeomError> {
    polar_quadrature(region, n_radial, n_angular, ReferenceMeasure::Hyperbolic)
}
