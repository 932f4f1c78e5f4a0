//! Determinants of small L-kernel matrices in double-double arithmetic.
//!
//! For clustered points `det(1/(1 − q_j q̄_k))` is tiny compared with its
//! entries, and an `f64` elimination loses digits in proportion to that ratio.
//! Entries and elimination are carried in double-double so the result keeps
//! close to full `f64` relative accuracy.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::geom::Point;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let u = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(u.hi, u.lo + t.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        // two Newton-style correction steps on the quotient
        let q1 = self.hi / o.hi;
        let r = self - o * Dd { hi: q1, lo: 0.0 };
        let q2 = r.hi / o.hi;
        let r = r - o * Dd { hi: q2, lo: 0.0 };
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + Dd { hi: q3, lo: 0.0 }
    }
}

#[derive(Clone, Copy)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    fn div(self, o: Cdd) -> Cdd {
        let d = o.re * o.re + o.im * o.im;
        Cdd { re: (self.re * o.re + self.im * o.im) / d, im: (self.im * o.re - self.re * o.im) / d }
    }

    fn magnitude(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
}

/// `a_j a_k / (1 − q_j q̄_k)` with the product `q_j q̄_k` formed exactly.
fn entry(qj: Point, qk: Point, aj: f64, ak: f64) -> Cdd {
    let (x1, y1) = (qj.z().re, qj.z().im);
    let (x2, y2) = (qk.z().re, qk.z().im);
    let re = two_prod(x1, x2) + two_prod(y1, y2);
    let im = two_prod(y1, x2) - two_prod(x1, y2);
    let den = Cdd { re: Dd::ONE - re, im: -im };
    let num = Cdd { re: two_prod(aj, ak), im: Dd::ZERO };
    num.div(den)
}

/// `det[a_j a_k / (1 − q_j q̄_k)]`, real because the matrix is Hermitian.
#[allow(clippy::needless_range_loop)]
pub(crate) fn kernel_determinant(points: &[Point], amplitudes: &[f64]) -> f64 {
    let n = points.len();
    let mut m: Vec<Vec<Cdd>> =
        (0..n).map(|j| (0..n).map(|k| entry(points[j], points[k], amplitudes[j], amplitudes[k])).collect()).collect();
    let mut det = Cdd { re: Dd::ONE, im: Dd::ZERO };
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].magnitude().total_cmp(&m[b][col].magnitude())).unwrap();
        if m[pivot][col].magnitude() == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = Cdd { re: -det.re, im: -det.im };
        }
        let pv = m[col][col];
        det = det.mul(pv);
        for i in (col + 1)..n {
            let f = m[i][col].div(pv);
            for k in col..n {
                let s = f.mul(m[col][k]);
                m[i][k] = m[i][k].sub(s);
            }
        }
    }
    det.re.to_f64()
}
