//! Zero sets of the truncated hyperbolic Gaussian analytic function
//! `Σ_{n ≤ N} aₙ zⁿ`, `aₙ` i.i.d. standard complex Gaussian.

mod io;
mod roots;
mod stats;
mod winding;

pub use io::{configurations_from_csv, configurations_to_csv};
pub use roots::{poly_eval, AberthOptions};
pub use stats::{
    angular_chi_square, empirical_intensity, pair_correlation_pseudo, AngularChiSquare, CellEstimate,
    PairCorrelationEstimate,
};
pub use winding::winding_count;

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{GeomError, Point, Region};
use roots::RootFailure;

pub const DEFAULT_DEGREE: usize = 1024;
pub const DEFAULT_WINDOW: f64 = 0.99;
/// Bound on the variance of the discarded series tail at the window edge.
pub const TRUNCATION_TAIL_VARIANCE: f64 = 1e-10;
const MAX_RESAMPLES: u32 = 16;

#[derive(Debug, Error)]
pub enum GafError {
    #[error("degree must be at least 1")]
    BadDegree,
    #[error("window radius must lie in (0, 1), got {0}")]
    BadWindow(f64),
    #[error("root finder failed for seed {seed}: {reason}")]
    RootFinding { seed: u64, reason: String },
    #[error("seed {seed}: {roots} roots in |z| <= {radius} but winding number {winding}")]
    WindingMismatch { seed: u64, radius: f64, roots: usize, winding: i64 },
    #[error("argument principle did not settle on |z| = {radius}: winding {value}")]
    WindingUnresolved { radius: f64, value: f64 },
    #[error("need at least {needed} configurations, got {got}")]
    TooFewConfigurations { needed: usize, got: usize },
    #[error("cell {cell} is not inside the observation window {window}")]
    CellOutsideWindow { cell: String, window: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// SplitMix64 finalizer used to derive independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut x = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of sample `index` in the stream rooted at `master_seed`.
pub fn stream_seed(master_seed: u64, index: u64) -> u64 {
    mix_seed(master_seed, index)
}

/// One draw of the truncated series and its roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GafSample {
    pub seed: u64,
    pub degree: usize,
    /// Number of degenerate draws that were discarded before this one.
    pub resamples: u32,
    pub coefficients: Vec<Complex64>,
    pub roots_all: Vec<Complex64>,
}

impl GafSample {
    /// Draws coefficients for `seed` and solves for all roots, redrawing with
    /// a derived sub-seed in the (probability zero) degenerate cases.
    pub fn draw(seed: u64, degree: usize) -> Result<Self, GafError> {
        Self::draw_with(seed, degree, &AberthOptions::default())
    }

    pub fn draw_with(seed: u64, degree: usize, opts: &AberthOptions) -> Result<Self, GafError> {
        let mut resamples = 0;
        loop {
            let coeff_seed = if resamples == 0 { seed } else { mix_seed(seed, resamples as u64) };
            let mut sample = sample_coefficients(coeff_seed, degree)?;
            match roots::aberth(&sample.coefficients, opts) {
                Ok(r) => {
                    sample.seed = seed;
                    sample.resamples = resamples;
                    sample.roots_all = r;
                    return Ok(sample);
                }
                Err(RootFailure::ZeroLeading | RootFailure::Clustered { .. }) if resamples < MAX_RESAMPLES => {
                    warn!("seed {seed}: degenerate draw {resamples}, resampling");
                    resamples += 1;
                }
                Err(e) => {
                    return Err(GafError::RootFinding { seed, reason: format!("{e:?}") });
                }
            }
        }
    }
}

/// I.i.d. standard complex Gaussian coefficients `a_0..a_N`, `E|a|² = 1`.
pub fn sample_coefficients(seed: u64, degree: usize) -> Result<GafSample, GafError> {
    if degree == 0 {
        return Err(GafError::BadDegree);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let coefficients = (0..=degree)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    Ok(GafSample { seed, degree, resamples: 0, coefficients, roots_all: Vec::new() })
}

/// All roots of `Σ a_k z^k` by Aberth–Ehrlich iteration with Newton polish.
pub fn find_roots(coefficients: &[Complex64]) -> Result<Vec<Complex64>, GafError> {
    if coefficients.len() < 2 {
        return Err(GafError::BadDegree);
    }
    roots::aberth(coefficients, &AberthOptions::default())
        .map_err(|e| GafError::RootFinding { seed: 0, reason: format!("{e:?}") })
}

/// Smallest degree with `r^(2N) / (1 − r²) < 1e-10`.
pub fn min_degree_for_window(r_cut: f64) -> usize {
    let n = (TRUNCATION_TAIL_VARIANCE.ln() + (1.0 - r_cut * r_cut).ln()) / (2.0 * r_cut.ln());
    n.ceil().max(1.0) as usize
}

pub fn truncation_criterion_met(degree: usize, r_cut: f64) -> bool {
    r_cut.powi(2 * degree as i32) / (1.0 - r_cut * r_cut) < TRUNCATION_TAIL_VARIANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSource {
    pub seed: u64,
    pub degree: usize,
}

/// Particles observed in the window `|z| ≤ window_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    #[serde(flatten)]
    pub source: SampleSource,
    pub window_radius: f64,
    pub particles: Vec<Point>,
}

impl Configuration {
    pub fn new(particles: Vec<Point>, window_radius: f64, source: SampleSource) -> Self {
        Configuration { source, window_radius, particles }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn count_in(&self, region: &Region) -> usize {
        self.particles.iter().filter(|p| region.contains(p.z())).count()
    }

    /// Restriction to the complement of `region`.
    pub fn without_region(&self, region: &Region) -> Configuration {
        Configuration {
            source: self.source,
            window_radius: self.window_radius,
            particles: self.particles.iter().copied().filter(|p| !region.contains(p.z())).collect(),
        }
    }

    /// Copy with one extra particle.
    pub fn with_particle(&self, p: Point) -> Configuration {
        let mut c = self.clone();
        c.particles.push(p);
        c
    }
}

/// Restricts the roots of `sample` to `|z| ≤ r_cut` and checks the count
/// against the argument principle on `|z| = r_cut`.
pub fn zeros_in_window(sample: &GafSample, r_cut: f64) -> Result<Configuration, GafError> {
    if !(r_cut > 0.0 && r_cut < 1.0) {
        return Err(GafError::BadWindow(r_cut));
    }
    static WARNED: std::sync::Once = std::sync::Once::new();
    if !truncation_criterion_met(sample.degree, r_cut) {
        WARNED.call_once(|| warn!(
            "degree {} below {} required for window {r_cut}; zeros near the edge carry truncation error",
            sample.degree,
            min_degree_for_window(r_cut)
        ));
    }
    let particles: Vec<Point> = sample
        .roots_all
        .iter()
        .filter(|z| z.norm() <= r_cut)
        .map(|&z| Point::new(z))
        .collect::<Result<_, _>>()?;
    let winding = winding_count(&sample.coefficients, r_cut)?;
    if winding != particles.len() as i64 {
        return Err(GafError::WindingMismatch {
            seed: sample.seed,
            radius: r_cut,
            roots: particles.len(),
            winding,
        });
    }
    Ok(Configuration {
        source: SampleSource { seed: sample.seed, degree: sample.degree },
        window_radius: r_cut,
        particles,
    })
}

/// Draws the configuration for stream index `index` of `master_seed`.
pub fn sample_configuration(master_seed: u64, index: u64, degree: usize, r_cut: f64) -> Result<Configuration, GafError> {
    let sample = GafSample::draw(stream_seed(master_seed, index), degree)?;
    zeros_in_window(&sample, r_cut)
}
