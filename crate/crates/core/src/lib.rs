//! Numerical laboratory for the zero set of the hyperbolic Gaussian analytic
//! function on the unit disc.
//!
//! The zeros of `Σ aₙ zⁿ` with i.i.d. standard complex Gaussian coefficients
//! form the determinantal point process governed by the Bergman kernel
//! `K(z, w) = 1 / (π (1 − z w̄)²)`. This crate samples that process, evaluates
//! the regularized Blaschke-product functionals that give its Palm measures,
//! assembles the conditional L-ensemble on a bounded region, and checks every
//! constant against exact spectral oracles.
//!
//! Module map:
//!
//! * [`geom`]: Poincaré-disc geometry, hyperbolic balls and quadrature grids.
//! * [`gaf`]: coefficient sampling, Aberth–Ehrlich root finding, windows.
//! * [`spectra`]: Bergman kernel, radial spectra, Fredholm/Carleman determinants.
//! * [`functional`]: the regularized multiplicative functional and its normalization.
//! * [`conditional`]: the conditional L-ensemble, densities and sampling.
//! * [`harness`]: Monte Carlo experiments, reports and the command line.

pub mod conditional;
pub mod functional;
pub mod gaf;
pub mod geom;
pub mod harness;
pub mod spectra;

pub use num_complex::Complex64;
