//! Spectra of `√g K √g` for radial symbols `g`.
//!
//! For `g(z) = g̃(|z|²)` the monomials `√g zᵏ` are eigenfunctions of
//! `√g K √g` with eigenvalue `λ_k = (k+1) ∫₀¹ g̃(ρ) ρᵏ dρ`, so every
//! determinant of such an operator is a product over `k`.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::SpectraError;
use crate::geom::adaptive_integrate;

/// Radial profile `g̃(ρ)`, `ρ = |z|²`.
#[derive(Clone)]
pub enum RadialSymbol {
    /// `g̃(ρ) = 1 − ρ`, the weight `1 − |z|²` of the Hilbert–Schmidt operator
    /// `K₁`: `λ_k = 1/(k+2)`.
    OneMinusRho,
    /// `g̃ ≡ c`: `λ_k = c`.
    Constant(f64),
    /// Indicator of `|z| < r`: `λ_k = r^{2(k+1)}`.
    DiscIndicator { r: f64 },
    /// `(1 − ρᵖ)` on `|z| < r`, zero outside:
    /// `λ_k = r^{2(k+1)} − (k+1)/(k+1+p) · r^{2(k+1+p)}`.
    OneMinusPowerOnDisc { power: u32, r: f64 },
    /// Arbitrary bounded profile, integrated adaptively. Jumps of the profile
    /// must be listed in `breakpoints`: a Gauss–Kronrod panel cannot see a jump
    /// that falls between its outermost node and its endpoint.
    Custom { name: String, profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>, breakpoints: Vec<f64> },
}

impl fmt::Debug for RadialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl RadialSymbol {
    pub fn describe(&self) -> String {
        match self {
            RadialSymbol::OneMinusRho => "1-rho".to_string(),
            RadialSymbol::Constant(c) => format!("const({c})"),
            RadialSymbol::DiscIndicator { r } => format!("indicator(|z|<{r})"),
            RadialSymbol::OneMinusPowerOnDisc { power, r } => format!("(1-rho^{power})*indicator(|z|<{r})"),
            RadialSymbol::Custom { name, .. } => format!("custom({name})"),
        }
    }

    /// The profile value `g̃(ρ)`.
    pub fn profile(&self, rho: f64) -> f64 {
        match self {
            RadialSymbol::OneMinusRho => 1.0 - rho,
            RadialSymbol::Constant(c) => *c,
            RadialSymbol::DiscIndicator { r } => {
                if rho < r * r {
                    1.0
                } else {
                    0.0
                }
            }
            RadialSymbol::OneMinusPowerOnDisc { power, r } => {
                if rho < r * r {
                    1.0 - rho.powi(*power as i32)
                } else {
                    0.0
                }
            }
            RadialSymbol::Custom { profile, .. } => profile(rho),
        }
    }

    fn closed_form(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        match *self {
            RadialSymbol::OneMinusRho => Some(1.0 / (kf + 2.0)),
            RadialSymbol::Constant(c) => Some(c),
            RadialSymbol::DiscIndicator { r } => Some((r * r).powf(kf + 1.0)),
            RadialSymbol::OneMinusPowerOnDisc { power, r } => {
                let a = r * r;
                let p = power as f64;
                Some(a.powf(kf + 1.0) * (1.0 - (kf + 1.0) / (kf + 1.0 + p) * a.powf(p)))
            }
            RadialSymbol::Custom { .. } => None,
        }
    }

    /// Upper bound on `Σ_{k > k_max} λ_k² / (2(1 − λ_k))`, which bounds the
    /// change of `log det₂` from the neglected eigenvalues.
    fn det2_tail_bound(&self, k_max: usize) -> Option<f64> {
        let kf = k_max as f64;
        match *self {
            // Σ_{m ≥ K+3} 1/(2m(m−1)) telescopes to 1/(2(K+2))
            RadialSymbol::OneMinusRho => Some(0.5 / (kf + 2.0)),
            RadialSymbol::Constant(c) => Some(if c == 0.0 { 0.0 } else { f64::INFINITY }),
            RadialSymbol::DiscIndicator { r } | RadialSymbol::OneMinusPowerOnDisc { r, .. } => {
                // λ_k ≤ a^{k+1}, a = r²
                let a = r * r;
                let first = a.powf(2.0 * (kf + 2.0));
                Some(first / ((1.0 - a * a) * 2.0 * (1.0 - a.powf(kf + 2.0))))
            }
            RadialSymbol::Custom { .. } => None,
        }
    }
}

/// Eigenvalues `λ_0..=λ_{k_max}` of `√g K √g`.
#[derive(Debug, Clone)]
pub struct RadialSpectrum {
    pub symbol: RadialSymbol,
    pub eigenvalues: Vec<f64>,
}

impl RadialSpectrum {
    pub fn k_max(&self) -> usize {
        self.eigenvalues.len() - 1
    }
}

pub fn radial_eigenvalues(symbol: RadialSymbol, k_max: usize) -> Result<RadialSpectrum, SpectraError> {
    let mut eigenvalues = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let lambda = match symbol.closed_form(k) {
            Some(v) => v,
            None => {
                let kf = k as f64;
                let f = |rho: f64| {
                    let w = if rho > 0.0 { (kf * rho.ln()).exp() } else if k == 0 { 1.0 } else { 0.0 };
                    symbol.profile(rho) * w
                };
                // split where ρᵏ concentrates so the adaptive rule sees the bump
                let knee = if k > 8 { 1.0 - 8.0 / kf } else { 0.5 };
                let mut cuts = vec![0.0, knee, 1.0];
                if let RadialSymbol::Custom { breakpoints, .. } = &symbol {
                    cuts.extend(breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let tol = 1e-13 / (kf + 1.0);
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    let (v, _) = adaptive_integrate(f, w[0], w[1], tol, 1e-13)
                        .map_err(|e| SpectraError::Quadrature { k, reason: e.to_string() })?;
                    total += v;
                }
                (kf + 1.0) * total
            }
        };
        eigenvalues.push(lambda);
    }
    Ok(RadialSpectrum { symbol, eigenvalues })
}

/// Sign in `det(1 ± A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `∏_{k=0}^{n} (1 ± λ_k)`.
pub fn det_truncated(spectrum: &RadialSpectrum, n: usize, sign: Sign) -> Result<f64, SpectraError> {
    if n > spectrum.k_max() {
        return Err(SpectraError::TruncationBeyondSpectrum { n, k_max: spectrum.k_max() });
    }
    let s = sign.value();
    Ok(spectrum.eigenvalues[..=n].iter().map(|l| 1.0 + s * l).product())
}

/// Exact rational `∏_{k=0}^{n} (1 ± 1/(k+2))` for the `1 − ρ` symbol.
pub fn det_truncated_exact(n: usize, sign: Sign) -> Ratio<i128> {
    let s: i128 = match sign {
        Sign::Plus => 1,
        Sign::Minus => -1,
    };
    (0..=n as i128).fold(Ratio::from_integer(1), |acc, k| acc * Ratio::new(k + 2 + s, k + 2))
}

/// Carleman determinant `det₂(1 ± A) = ∏(1 ± λ_k) e^{∓λ_k}` over the stored
/// spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Det2Report {
    pub symbol: String,
    pub k_max: usize,
    pub sign: Sign,
    pub value: f64,
    pub log_value: f64,
    /// Bound on `|log det₂ − log value|` from eigenvalues beyond `k_max`;
    /// `None` when no analytic bound is known for the symbol.
    pub tail_bound: Option<f64>,
}

impl Det2Report {
    /// Uncertainty of `value` implied by the tail bound.
    pub fn value_uncertainty(&self) -> Option<f64> {
        self.tail_bound.map(|t| self.value * t.exp_m1())
    }
}

pub fn det2(spectrum: &RadialSpectrum, sign: Sign) -> Det2Report {
    let s = sign.value();
    // pairwise-style accumulation: small terms first
    let log_value: f64 = spectrum.eigenvalues.iter().rev().map(|&l| (s * l).ln_1p() - s * l).sum();
    Det2Report {
        symbol: spectrum.symbol.describe(),
        k_max: spectrum.k_max(),
        sign,
        value: log_value.exp(),
        log_value,
        tail_bound: spectrum.symbol.det2_tail_bound(spectrum.k_max()),
    }
}

/// Probability of no zero in `|z| < r`: `∏_{k≥1} (1 − r^{2k})`.
pub fn hole_probability_disc(r: f64) -> Result<f64, SpectraError> {
    if !(0.0..1.0).contains(&r) {
        return Err(SpectraError::BadRadius(r));
    }
    let a = r * r;
    let mut term = a;
    let mut log = 0.0;
    while term > 1e-17 {
        log += (-term).ln_1p();
        term *= a;
    }
    Ok(log.exp())
}

/// Law of a sum of independent Bernoulli(λ_i) variables: the coefficients of
/// `∏ (1 − λ_i + λ_i s)` up to `s^{m_max}`.
pub fn count_distribution(eigenvalues: &[f64], m_max: usize) -> Vec<f64> {
    let mut dist = vec![0.0; m_max + 1];
    dist[0] = 1.0;
    for &l in eigenvalues {
        for m in (0..=m_max).rev() {
            let stay = dist[m] * (1.0 - l);
            let moved = if m > 0 { dist[m - 1] * l } else { 0.0 };
            dist[m] = stay + moved;
        }
    }
    dist
}

/// `P(#{|z| < r} = m)` for the Bergman process.
pub fn count_distribution_disc(r: f64, m: usize) -> Result<f64, SpectraError> {
    if !(0.0..1.0).contains(&r) {
        return Err(SpectraError::BadRadius(r));
    }
    let a = r * r;
    let mut eig = Vec::new();
    let mut l = a;
    while l > 1e-18 {
        eig.push(l);
        l *= a;
    }
    Ok(count_distribution(&eig, m)[m])
}
