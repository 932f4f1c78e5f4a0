//! Spectral sampling of a finite L-ensemble.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConditionalError, LEnsemble};
use crate::geom::Point;

/// One draw of the ensemble: keep eigenvector `i` with probability
/// `μᵢ/(1+μᵢ)`, then sample the projection process of the kept vectors one
/// point at a time, eliminating the chosen coordinate after each pick.
pub fn sample_conditional(l: &LEnsemble, seed: u64) -> Result<Vec<Point>, ConditionalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = l.len();
    let chosen: Vec<usize> =
        (0..l.eigen.values.len()).filter(|&i| rng.gen::<f64>() < l.eigen.values[i] / (1.0 + l.eigen.values[i])).collect();
    // columns of the kept eigenvectors, stored column-major for cheap updates
    let mut v: Vec<Vec<Complex64>> = chosen.iter().map(|&c| l.eigen.vectors.column(c)).collect();
    let mut picked = Vec::with_capacity(v.len());
    while !v.is_empty() {
        let k = v.len() as f64;
        let weights: Vec<f64> = (0..n).map(|i| v.iter().map(|col| col[i].norm_sqr()).sum::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.5 * k && total < 2.0 * k) {
            return Err(ConditionalError::Projection(total));
        }
        let mut u = rng.gen::<f64>() * total;
        let mut idx = n - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                idx = i;
                break;
            }
            u -= w;
        }
        picked.push(l.grid.nodes[idx]);

        // eliminate coordinate idx: use the column with the largest entry
        // there as pivot, then drop it
        let pivot = (0..v.len()).max_by(|&a, &b| v[a][idx].norm().total_cmp(&v[b][idx].norm())).unwrap();
        let pv = v.swap_remove(pivot);
        let p_idx = pv[idx];
        for col in v.iter_mut() {
            let f = col[idx] / p_idx;
            for (c, p) in col.iter_mut().zip(&pv) {
                *c -= f * p;
            }
            col[idx] = Complex64::new(0.0, 0.0);
        }
        // re-orthonormalize (modified Gram–Schmidt)
        for a in 0..v.len() {
            for b in 0..a {
                let dot: Complex64 = v[b].iter().zip(&v[a]).map(|(x, y)| x.conj() * y).sum();
                let (left, right) = v.split_at_mut(a);
                for (y, x) in right[0].iter_mut().zip(&left[b]) {
                    *y -= dot * x;
                }
            }
            let norm = v[a].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm.is_nan() || norm <= 1e-12 {
                return Err(ConditionalError::Projection(norm));
            }
            for x in v[a].iter_mut() {
                *x /= norm;
            }
        }
    }
    Ok(picked)
}
