//! Small dense complex linear algebra: Hermitian Jacobi eigensolver and LU
//! determinants. Sizes here stay in the hundreds.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpectraError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Hermitian matrix from its lower triangle (diagonal imaginary parts dropped).
    pub fn hermitian_from_fn<F: FnMut(usize, usize) -> Complex64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
            m[(i, i)] = Complex64::new(f(i, i).re, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Largest `|a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..=i.min(self.cols.saturating_sub(1)) {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Principal submatrix on `idx`.
    pub fn principal(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Submatrix of the given columns.
    pub fn select_columns(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Cyclic Jacobi for Hermitian matrices.
///
/// Each rotation is a phase change `diag(1, e^{-iφ})` making the pivot real,
/// followed by the classical real rotation.
pub fn jacobi_eigen(a: &CMatrix) -> Result<HermitianEigen, SpectraError> {
    const MAX_SWEEPS: usize = 100;
    if !a.is_square() {
        return Err(SpectraError::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut sweep = 0;
    loop {
        let off: f64 = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm_sqr()).sum();
        if off.sqrt() <= 1e-15 * scale || n < 2 {
            break;
        }
        if sweep >= MAX_SWEEPS {
            return Err(SpectraError::EigenNoConvergence { sweeps: sweep, off_norm: off.sqrt() });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 || mag <= 1e-18 * scale {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / mag; // e^{iφ}
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] acting on columns (p, q)
                let eneg = phase.conj();
                let gqp = -s * eneg;
                let gqq = c * eneg;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c + akq * gqp;
                    m[(k, q)] = akp * s + akq * gqq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c + aqk * gqp.conj();
                    m[(q, k)] = apk * s + aqk * gqq.conj();
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = Complex64::new(app - t * mag, 0.0);
                m[(q, q)] = Complex64::new(aqq + t * mag, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * gqp;
                    v[(k, q)] = vkp * s + vkq * gqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(HermitianEigen { values, vectors })
}

/// Determinant by LU with partial pivoting.
pub fn determinant(a: &CMatrix) -> Complex64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut det = ONE;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm())).unwrap();
        let pv = m[(pivot, col)];
        if pv == ZERO {
            return ZERO;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(pivot, k)];
                m[(pivot, k)] = tmp;
            }
            det = -det;
        }
        det *= pv;
        for i in (col + 1)..n {
            let f = m[(i, col)] / pv;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let sub = f * m[(col, k)];
                m[(i, k)] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::hermitian_from_fn(n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn jacobi_reconstructs() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let a = random_hermitian(n, seed);
            let e = jacobi_eigen(&a).unwrap();
            let v = &e.vectors;
            let d = CMatrix::from_real_diagonal(&e.values);
            let rec = v.matmul(&d).matmul(&v.conj_transpose());
            let diff = CMatrix::from_fn(n, n, |i, j| rec[(i, j)] - a[(i, j)]).frobenius_norm();
            assert!(diff < 1e-12 * a.frobenius_norm().max(1.0), "n={n}: {diff}");
            let vv = v.conj_transpose().matmul(v);
            let off = CMatrix::from_fn(n, n, |i, j| vv[(i, j)] - if i == j { ONE } else { ZERO }).frobenius_norm();
            assert!(off < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let n = 12;
        let a = random_hermitian(n, 99);
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let v = a[(i, j)];
            nalgebra::Complex::new(v.re, v.im)
        });
        let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        let ours = jacobi_eigen(&a).unwrap().values;
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn lu_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 7;
        let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>()));
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| nalgebra::Complex::new(a[(i, j)].re, a[(i, j)].im));
        let theirs = na.determinant();
        let ours = determinant(&a);
        assert!((ours.re - theirs.re).abs() < 1e-12 && (ours.im - theirs.im).abs() < 1e-12);
        let singular = CMatrix::from_fn(3, 3, |i, _| Complex64::new(i as f64, 0.0));
        assert_eq!(determinant(&singular), ZERO);
        assert_eq!(determinant(&CMatrix::zeros(0, 0)), ONE);
    }
}
