//! Empirical intensity and correlation estimators over sampled configurations.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{Configuration, GafError};
use crate::geom::{blaschke, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub cell: Region,
    pub mean_count: f64,
    /// Mean count divided by the Euclidean cell area.
    pub intensity: f64,
    pub std_error: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_inside(configs: &[Configuration], cell: &Region) -> Result<(), GafError> {
    let window = configs.iter().map(|c| c.window_radius).fold(f64::INFINITY, f64::min);
    if cell.max_modulus() > window {
        return Err(GafError::CellOutsideWindow { cell: format!("{cell:?}"), window });
    }
    Ok(())
}

/// Count-per-area estimates of the first intensity with the standard error
/// of the per-configuration counts.
pub fn empirical_intensity(configs: &[Configuration], cells: &[Region]) -> Result<Vec<CellEstimate>, GafError> {
    if configs.len() < 2 {
        return Err(GafError::TooFewConfigurations { needed: 2, got: configs.len() });
    }
    cells
        .iter()
        .map(|cell| {
            check_inside(configs, cell)?;
            let counts: Vec<f64> = configs.iter().map(|c| c.count_in(cell) as f64).collect();
            let (mean, se) = mean_and_se(&counts);
            let area = cell.area();
            Ok(CellEstimate { cell: *cell, mean_count: mean, intensity: mean / area, std_error: se / area })
        })
        .collect()
}

/// Two-point function estimated through Möbius averaging.
///
/// Counts ordered pairs `(x, y)` with `|x| < r0` and `s_lo ≤ |φ_x(y)| < s_hi`.
/// For a Möbius-invariant process the count divided by the expected number of
/// anchors `E #{|x| < r0}` estimates the Palm intensity of the annulus
/// `s_lo ≤ |w| < s_hi` seen from a particle at the origin; multiplying by
/// `ρ₁(0) = 1/π` and dividing by the annulus area gives the annulus average of
/// `ρ₂(0, w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelationEstimate {
    pub anchor_radius: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub mean_pairs: f64,
    /// Annulus average of `ρ₂(0, w)`.
    pub rho2: f64,
    pub std_error: f64,
}

pub fn pair_correlation_pseudo(
    configs: &[Configuration],
    anchor_radius: f64,
    s_lo: f64,
    s_hi: f64,
) -> Result<PairCorrelationEstimate, GafError> {
    if configs.len() < 2 {
        return Err(GafError::TooFewConfigurations { needed: 2, got: configs.len() });
    }
    let reach = (anchor_radius + s_hi) / (1.0 + anchor_radius * s_hi);
    check_inside(configs, &Region::centered_disc(reach))?;
    let counts: Vec<f64> = configs
        .iter()
        .map(|c| {
            let mut n = 0usize;
            for x in c.particles.iter().filter(|x| x.norm() < anchor_radius) {
                for y in &c.particles {
                    if x == y {
                        continue;
                    }
                    let s = blaschke(*x, *y).norm();
                    if s >= s_lo && s < s_hi {
                        n += 1;
                    }
                }
            }
            n as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&counts);
    let anchors = anchor_radius * anchor_radius / (1.0 - anchor_radius * anchor_radius);
    let scale = (1.0 / PI) / (anchors * PI * (s_hi * s_hi - s_lo * s_lo));
    Ok(PairCorrelationEstimate {
        anchor_radius,
        s_lo,
        s_hi,
        mean_pairs: mean,
        rho2: mean * scale,
        std_error: se * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub total: usize,
}

impl AngularChiSquare {
    /// Not rejected at `z` standard deviations of the χ² law (normal approximation).
    pub fn accepted(&self, z: f64) -> bool {
        let d = self.dof as f64;
        self.statistic <= d + z * (2.0 * d).sqrt()
    }
}

/// Pearson χ² of particle angles in `r_lo ≤ |z| < r_hi` against uniform bins.
pub fn angular_chi_square(
    configs: &[Configuration],
    r_lo: f64,
    r_hi: f64,
    bins: usize,
) -> Result<AngularChiSquare, GafError> {
    check_inside(configs, &Region::centered_disc(r_hi))?;
    let mut hist = vec![0usize; bins];
    for c in configs {
        for p in &c.particles {
            let r = p.norm();
            if r >= r_lo && r < r_hi {
                let t = p.z().arg().rem_euclid(TAU);
                let b = ((t / TAU) * bins as f64) as usize;
                hist[b.min(bins - 1)] += 1;
            }
        }
    }
    let total: usize = hist.iter().sum();
    let expected = total as f64 / bins as f64;
    let statistic = hist.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
    Ok(AngularChiSquare { statistic, dof: bins - 1, total })
}
