//! The conditional law of the particles inside a region `B` given the
//! particles `Y` outside it: an L-ensemble on `B` whose kernel is built from
//! the normalized functional `Ψ̄_q(Y)`.
//!
//! Densities are taken against `dA(q) / (π (1 − |q|²)²)`. Writing
//! `a(q)` for the amplitude attached to `q`, the kernel is
//!
//! ```text
//! L_Y(q₁, q₂) = a(q₁) a(q₂) / (1 − q₁ q̄₂)
//! ```
//!
//! and the Cauchy identity turns `det L_Y(q_j, q_k)` into
//! `∏ a(q_j)² / (1 − |q_j|²) · ∏_{j<k} |φ_{q_j}(q_k)|²`. Matching the product
//! form `∏ Ψ̄_{q_j}(Y) ∏_{j<k} |φ_{q_j}(q_k)|²` requires
//! `a(q) = √(Ψ̄_q(Y) (1 − |q|²))`; that is [`LKernelForm::Corrected`].
//! [`LKernelForm::Unweighted`] uses `a = Ψ̄` for comparison.

mod extended;
mod sampler;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sampler::sample_conditional;

use crate::functional::{psi_bar, psi_limit, FunctionalError, NormConstant, RGrid};
use crate::gaf::Configuration;
use crate::geom::{blaschke, hyperbolic_quadrature, GeomError, Point, QuadratureGrid, Region};
use crate::spectra::{count_distribution, jacobi_eigen, CMatrix, SpectraError};

/// Default conditioning region: the disc of radius 0.4 about the origin.
pub const DEFAULT_REGION_RADIUS: f64 = 0.4;
pub const DEFAULT_GRID: (usize, usize) = (12, 24);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionalError {
    #[error("conditioning configuration has {count} particles inside the region")]
    ParticlesInRegion { count: usize },
    #[error("point {0:?} is not in the region")]
    PointOutsideRegion(Point),
    #[error("synthetic amplitudes: {got} values for {nodes} nodes")]
    SyntheticLength { got: usize, nodes: usize },
    #[error("eigenvector projection lost orthogonality (norm {0:e})")]
    Projection(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// `ψ₁ ψ₂ / (1 − q₁ q̄₂)`.
pub fn l_kernel(q1: Point, q2: Point, psi1: f64, psi2: f64) -> Complex64 {
    Complex64::new(psi1 * psi2, 0.0) / (Complex64::new(1.0, 0.0) - q1.z() * q2.z().conj())
}

/// Both sides of the Cauchy identity for `det(1/(1 − q_j q̄_k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub n: usize,
    /// Direct LU determinant (double-double elimination).
    pub determinant: f64,
    /// `∏_{j<k} |q_j − q_k|² / ∏_{j,k} (1 − q_j q̄_k)`.
    pub factored: f64,
    /// The same with the denominator restricted to `j < k` as `|1 − q_j q̄_k|²`
    /// (no diagonal factors); differs from the determinant in general.
    pub factored_without_diagonal: f64,
}

impl CauchyReport {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.determinant.abs().max(self.factored.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.determinant - self.factored).abs() / scale
        }
    }
}

pub fn cauchy_det(points: &[Point]) -> CauchyReport {
    let n = points.len();
    let one = Complex64::new(1.0, 0.0);
    let det = extended::kernel_determinant(points, &vec![1.0; n]);
    let mut num = 1.0;
    let mut off = 1.0;
    let mut diag = 1.0;
    for j in 0..n {
        diag *= 1.0 - points[j].norm_sqr();
        for k in (j + 1)..n {
            num *= (points[j].z() - points[k].z()).norm_sqr();
            off *= (one - points[j].z() * points[k].z().conj()).norm_sqr();
        }
    }
    CauchyReport {
        n,
        determinant: if num == 0.0 { 0.0 } else { det },
        factored: num / (off * diag),
        factored_without_diagonal: num / off,
    }
}

/// How the kernel amplitude is derived from `Ψ̄_q(Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LKernelForm {
    /// `a = √(Ψ̄ (1 − |q|²))`, consistent with the Palm product form.
    Corrected,
    /// `a = Ψ̄`.
    Unweighted,
}

impl LKernelForm {
    pub fn amplitude(self, psi_bar: f64, q: Point) -> f64 {
        match self {
            LKernelForm::Corrected => (psi_bar * (1.0 - q.norm_sqr())).sqrt(),
            LKernelForm::Unweighted => psi_bar,
        }
    }

    /// `a² / (1 − |q|²)`: the one-point weight each particle contributes.
    fn one_point_weight(self, psi_bar: f64, q: Point) -> f64 {
        let a = self.amplitude(psi_bar, q);
        a * a / (1.0 - q.norm_sqr())
    }
}

/// Where the values `Ψ̄_q(Y)` come from.
#[derive(Clone)]
pub enum PsiSource {
    /// Estimated from the conditioning configuration.
    Functional { y: Configuration, norm: NormConstant },
    /// Prescribed values.
    Synthetic(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for PsiSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSource::Functional { y, norm } => {
                write!(f, "Functional {{ particles: {}, norm: {} }}", y.len(), norm.label())
            }
            PsiSource::Synthetic(_) => f.write_str("Synthetic"),
        }
    }
}

impl PsiSource {
    pub fn constant(value: f64) -> Self {
        PsiSource::Synthetic(Arc::new(move |_| value))
    }

    /// `Ψ̄_q(Y)`.
    pub fn evaluate(&self, q: Point) -> Result<f64, ConditionalError> {
        match self {
            PsiSource::Functional { y, norm } => {
                let est = psi_limit(q, y, &RGrid::for_window(q, y.window_radius))?;
                Ok(psi_bar(&est, *norm))
            }
            PsiSource::Synthetic(f) => Ok(f(q)),
        }
    }
}

/// Eigenvalues `μ_i > 0` of the weighted matrix with orthonormal
/// eigenvectors as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Finite L-ensemble on the nodes of a quadrature grid.
#[derive(Debug, Clone)]
pub struct LEnsemble {
    pub region: Region,
    pub grid: QuadratureGrid,
    pub form: LKernelForm,
    pub source: PsiSource,
    /// `Ψ̄_q(Y)` at the nodes.
    pub psi_values: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// `√(wᵢ wⱼ) L_Y(qᵢ, qⱼ)`.
    pub matrix: CMatrix,
    pub eigen: LEigen,
}

/// Eigenvalues below this fraction of the largest are dropped.
const EIGEN_FLOOR: f64 = 1e-14;

/// Smallest `r` with `m^{2r}` below double precision relative to 1.
fn gram_rank(max_modulus: f64) -> usize {
    if max_modulus <= 0.0 {
        return 1;
    }
    let r = ((1e-17f64).ln() / (2.0 * max_modulus.ln())).ceil();
    (r as usize).max(1)
}

/// Eigen-data of `F F*` through the small matrix `F* F`.
fn gram_eigen(f: &CMatrix) -> Result<LEigen, SpectraError> {
    let g = f.conj_transpose().matmul(f);
    let e = jacobi_eigen(&g)?;
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > EIGEN_FLOOR * top && e.values[i] > 0.0).collect();
    let u = e.vectors.select_columns(&keep);
    let mut v = f.matmul(&u);
    let values: Vec<f64> = keep.iter().map(|&i| e.values[i]).collect();
    for (c, mu) in values.iter().enumerate() {
        let s = mu.sqrt().recip();
        for r in 0..v.rows() {
            v[(r, c)] *= s;
        }
    }
    Ok(LEigen { values, vectors: v })
}

fn dense_eigen(m: &CMatrix) -> Result<LEigen, SpectraError> {
    let e = jacobi_eigen(m)?;
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > EIGEN_FLOOR * top && e.values[i] > 0.0).collect();
    Ok(LEigen { values: keep.iter().map(|&i| e.values[i]).collect(), vectors: e.vectors.select_columns(&keep) })
}

impl LEnsemble {
    /// Assembles the ensemble from node amplitudes.
    fn assemble(
        region: Region,
        grid: QuadratureGrid,
        form: LKernelForm,
        source: PsiSource,
        psi_values: Vec<f64>,
    ) -> Result<Self, ConditionalError> {
        let amplitudes: Vec<f64> = psi_values.iter().zip(&grid.nodes).map(|(&p, &q)| form.amplitude(p, q)).collect();
        let b: Vec<f64> = amplitudes.iter().zip(&grid.weights).map(|(a, w)| a * w.sqrt()).collect();
        let n = grid.len();
        let matrix = CMatrix::hermitian_from_fn(n, |i, j| l_kernel(grid.nodes[i], grid.nodes[j], b[i], b[j]));
        let rank = gram_rank(grid.nodes.iter().map(|q| q.norm()).fold(0.0, f64::max));
        let eigen = if rank < n {
            // 1/(1 − q₁q̄₂) = Σ_k q₁^k q̄₂^k, so L = F F* with F_ik = bᵢ qᵢ^k
            let f = CMatrix::from_fn(n, rank, |i, k| grid.nodes[i].z().powu(k as u32) * b[i]);
            gram_eigen(&f)?
        } else {
            dense_eigen(&matrix)?
        };
        Ok(LEnsemble { region, grid, form, source, psi_values, amplitudes, matrix, eigen })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Kernel value at arbitrary points of the region (unweighted).
    pub fn kernel_at(&self, q1: Point, q2: Point) -> Result<Complex64, ConditionalError> {
        let a1 = self.form.amplitude(self.source.evaluate(q1)?, q1);
        let a2 = self.form.amplitude(self.source.evaluate(q2)?, q2);
        Ok(l_kernel(q1, q2, a1, a2))
    }

    /// Eigenvalues of the dense matrix by Jacobi, for cross-checks.
    pub fn dense_eigenvalues(&self) -> Result<Vec<f64>, ConditionalError> {
        Ok(jacobi_eigen(&self.matrix)?.values)
    }

    pub fn summary(&self) -> LEnsembleSummary {
        let moments = conditional_count_moments(self, 0);
        LEnsembleSummary {
            region: self.region,
            n_radial: self.grid.n_radial,
            n_angular: self.grid.n_angular,
            form: self.form,
            eigenvalues: self.eigen.values.iter().rev().copied().collect(),
            eta0: eta0(self),
            mean_count: moments.mean,
        }
    }
}

/// Builds the ensemble on a hyperbolic quadrature grid of `region`, with
/// `Ψ̄_q(Y)` taken from `source` at every node.
pub fn build_l_ensemble(
    region: Region,
    grid_shape: (usize, usize),
    source: PsiSource,
    form: LKernelForm,
) -> Result<LEnsemble, ConditionalError> {
    region.validate()?;
    if let PsiSource::Functional { y, .. } = &source {
        let inside = y.count_in(&region);
        if inside > 0 {
            return Err(ConditionalError::ParticlesInRegion { count: inside });
        }
    }
    let grid = hyperbolic_quadrature(region, grid_shape.0, grid_shape.1)?;
    let psi_values: Vec<f64> =
        grid.nodes.par_iter().map(|&q| source.evaluate(q)).collect::<Result<_, _>>()?;
    LEnsemble::assemble(region, grid, form, source, psi_values)
}

/// Ensemble on an explicit grid with explicit node values of `Ψ̄`.
pub fn l_ensemble_from_values(
    grid: QuadratureGrid,
    psi_values: Vec<f64>,
    form: LKernelForm,
) -> Result<LEnsemble, ConditionalError> {
    if psi_values.len() != grid.len() {
        return Err(ConditionalError::SyntheticLength { got: psi_values.len(), nodes: grid.len() });
    }
    let nodes = grid.nodes.clone();
    let values = psi_values.clone();
    let lookup = move |q: Point| nodes.iter().position(|&n| n == q).map(|i| values[i]).unwrap_or(f64::NAN);
    LEnsemble::assemble(grid.region, grid, form, PsiSource::Synthetic(Arc::new(lookup)), psi_values)
}

/// `η_{Y,0} = 1 / det(I + L)`: conditional probability of an empty region.
pub fn eta0(l: &LEnsemble) -> f64 {
    (-l.eigen.values.iter().map(|m| m.ln_1p()).sum::<f64>()).exp()
}

/// Count law of an L-ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMoments {
    pub mean: f64,
    pub variance: f64,
    /// `P(# = m)` for `m = 0..=m_max`.
    pub distribution: Vec<f64>,
}

/// The count is a sum of independent Bernoulli(`μᵢ/(1+μᵢ)`) variables.
pub fn conditional_count_moments(l: &LEnsemble, m_max: usize) -> CountMoments {
    let p: Vec<f64> = l.eigen.values.iter().map(|m| m / (1.0 + m)).collect();
    CountMoments {
        mean: p.iter().sum(),
        variance: p.iter().map(|x| x * (1.0 - x)).sum(),
        distribution: count_distribution(&p, m_max),
    }
}

/// Janossy density of `points` in both forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDensityReport {
    pub m: usize,
    pub points: Vec<Point>,
    /// `η₀ det[L_Y(q_j, q_k)]`.
    pub density_det_form: f64,
    /// `η₀ ∏ Ψ̄_{q_j}(Y) ∏_{j<k} |φ_{q_j}(q_k)|²` (for the corrected kernel;
    /// with the unweighted kernel `Ψ̄` is replaced by `Ψ̄² / (1 − |q|²)`).
    pub density_product_form: f64,
    pub eta0: f64,
}

impl ConditionalDensityReport {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.density_det_form.abs().max(self.density_product_form.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.density_det_form - self.density_product_form).abs() / scale
        }
    }
}

pub fn conditional_density(points: &[Point], l: &LEnsemble) -> Result<ConditionalDensityReport, ConditionalError> {
    for &p in points {
        if !l.region.contains(p.z()) {
            return Err(ConditionalError::PointOutsideRegion(p));
        }
    }
    let e0 = eta0(l);
    let psi: Vec<f64> = points.iter().map(|&q| l.source.evaluate(q)).collect::<Result<_, _>>()?;
    let amp: Vec<f64> = psi.iter().zip(points).map(|(&p, &q)| l.form.amplitude(p, q)).collect();
    let m = points.len();
    let mut cross = 1.0;
    for j in 0..m {
        for k in (j + 1)..m {
            cross *= blaschke(points[j], points[k]).norm_sqr();
        }
    }
    let det = if cross == 0.0 { 0.0 } else { extended::kernel_determinant(points, &amp) };
    let single: f64 = psi.iter().zip(points).map(|(&p, &q)| l.form.one_point_weight(p, q)).product();
    Ok(ConditionalDensityReport {
        m,
        points: points.to_vec(),
        density_det_form: e0 * det,
        density_product_form: e0 * single * cross,
        eta0: e0,
    })
}

/// JSON summary of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LEnsembleSummary {
    pub region: Region,
    pub n_radial: usize,
    pub n_angular: usize,
    pub form: LKernelForm,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub eta0: f64,
    pub mean_count: f64,
}

/// Writes conditional samples as `sample_id,re,im` rows.
pub fn samples_to_csv<W: Write>(samples: &[Vec<Point>], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "re", "im"])?;
    for (i, s) in samples.iter().enumerate() {
        for p in s {
            w.write_record([i.to_string(), p.z().re.to_string(), p.z().im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
