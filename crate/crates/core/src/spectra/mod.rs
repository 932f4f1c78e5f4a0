//! Oracle layer: the Bergman kernel, exact spectra of radial multiplication
//! operators, Fredholm and Carleman determinants, and Nyström discretizations.

mod linalg;
mod radial;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linalg::{determinant, jacobi_eigen, CMatrix, HermitianEigen};
pub use radial::{
    count_distribution, count_distribution_disc, det2, det_truncated, det_truncated_exact, hole_probability_disc,
    radial_eigenvalues, Det2Report, RadialSpectrum, RadialSymbol, Sign,
};

use crate::geom::{Point, QuadratureGrid};

/// Default truncation for Carleman determinants.
pub const DEFAULT_DET2_K_MAX: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },
    #[error("quadrature for eigenvalue k = {k} failed: {reason}")]
    Quadrature { k: usize, reason: String },
    #[error("truncation n = {n} exceeds the computed spectrum (k_max = {k_max})")]
    TruncationBeyondSpectrum { n: usize, k_max: usize },
    #[error("radius must lie in [0, 1), got {0}")]
    BadRadius(f64),
}

/// `K(z, w) = 1 / (π (1 − z w̄)²)`.
pub fn bergman_kernel(z: Point, w: Point) -> Complex64 {
    bergman_raw(z.z(), w.z())
}

#[inline]
pub(crate) fn bergman_raw(z: Complex64, w: Complex64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - z * w.conj();
    (d * d * PI).inv()
}

/// Weighted kernel matrix `√(wᵢ wⱼ) k(zᵢ, zⱼ)` on a quadrature grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub entries: CMatrix,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, SpectraError> {
        Ok(jacobi_eigen(&self.entries)?.values)
    }
}

/// Nyström restriction of a Hermitian kernel to the grid. The weights are
/// used as given, so the grid's reference measure must be the one the kernel
/// is an integral operator against (Lebesgue area for the Bergman kernel).
pub fn nystrom_restrict<K>(kernel: K, grid: &QuadratureGrid) -> KernelMatrix
where
    K: Fn(Point, Point) -> Complex64,
{
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let entries = CMatrix::hermitian_from_fn(grid.len(), |i, j| kernel(grid.nodes[i], grid.nodes[j]) * (sw[i] * sw[j]));
    KernelMatrix { nodes: grid.nodes.clone(), weights: grid.weights.clone(), entries }
}

/// `det(I ± M)` from the eigenvalues of the Hermitian matrix `M`.
pub fn fredholm_det(matrix: &KernelMatrix, sign: Sign) -> Result<f64, SpectraError> {
    let s = sign.value();
    Ok(matrix.eigenvalues()?.iter().map(|l| 1.0 + s * l).product())
}

/// Serializable spectrum summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub symbol: String,
    pub k_max: usize,
    /// Leading eigenvalues (at most 64 are kept).
    pub values: Vec<f64>,
    /// `Σ λ_k` over the computed range. For `1 − ρ` truncated at `n` this is
    /// `1/2 + … + 1/(n+2)`.
    pub trace: f64,
    pub tail_bound: Option<f64>,
}

impl From<&RadialSpectrum> for SpectrumReport {
    fn from(s: &RadialSpectrum) -> Self {
        let d = det2(s, Sign::Minus);
        SpectrumReport {
            symbol: s.symbol.describe(),
            k_max: s.k_max(),
            values: s.eigenvalues.iter().take(64).copied().collect(),
            trace: s.eigenvalues.iter().rev().sum(),
            tail_bound: d.tail_bound,
        }
    }
}
