//! Aberth–Ehrlich simultaneous root finder.
//!
//! Evaluation switches to the reversed polynomial outside the unit circle so
//! Horner never sees `|z|^N` overflow. Initial approximations are spread over
//! circles whose radii come from the Newton polygon (upper convex hull of
//! `log |a_k|`), following Bini's choice.

use num_complex::Complex64;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AberthOptions {
    pub max_iterations: usize,
    /// Residual tolerance relative to `Σ |a_k| |z|^k`.
    pub residual_tolerance: f64,
    /// Roots closer than this are reported as a (numerically) multiple root.
    pub separation: f64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        AberthOptions { max_iterations: 600, residual_tolerance: 1e-12, separation: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RootFailure {
    ZeroLeading,
    NoConvergence { iterations: usize, unconverged: usize },
    Residual { worst: f64 },
    Clustered { distance: f64 },
}

/// `p(z)`, `p(z)/p'(z)` and the relative residual `|p(z)| / Σ|a_k||z|^k`.
struct Eval {
    ratio: Complex64,
    relative_residual: f64,
}

/// Coefficients in both orders with their moduli precomputed.
struct Poly {
    forward: Vec<Complex64>,
    forward_abs: Vec<f64>,
    reversed: Vec<Complex64>,
    reversed_abs: Vec<f64>,
}

impl Poly {
    fn new(coeffs: &[Complex64]) -> Self {
        let reversed: Vec<Complex64> = coeffs.iter().rev().copied().collect();
        Poly {
            forward_abs: coeffs.iter().map(|a| a.norm()).collect(),
            reversed_abs: reversed.iter().map(|a| a.norm()).collect(),
            forward: coeffs.to_vec(),
            reversed,
        }
    }

    #[inline]
    fn evaluate(&self, z: Complex64) -> Eval {
        let n = (self.forward.len() - 1) as f64;
        if z.norm_sqr() <= 1.0 {
            let (p, d, bound) = horner(&self.forward, &self.forward_abs, z);
            Eval { ratio: p / d, relative_residual: p.norm() / bound }
        } else {
            // p(z) = z^N r(1/z): p'/p = w (N − w r'(w)/r(w)), w = 1/z.
            let w = z.inv();
            let (r, dr, bound) = horner(&self.reversed, &self.reversed_abs, w);
            let log_deriv = w * (n - w * dr / r);
            Eval { ratio: log_deriv.inv(), relative_residual: r.norm() / bound }
        }
    }
}

/// `p(z)`, `p'(z)` and `Σ|a_k||z|^k`.
#[inline]
fn horner(coeffs: &[Complex64], abs: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let n = coeffs.len() - 1;
    let az = z.norm();
    let mut p = coeffs[n];
    let mut d = Complex64::new(0.0, 0.0);
    let mut bound = abs[n];
    for (a, m) in coeffs[..n].iter().zip(&abs[..n]).rev() {
        d = d * z + p;
        p = p * z + a;
        bound = bound * az + m;
    }
    (p, d, bound)
}

/// Evaluates `p(z)` by Horner's rule.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
}

fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let logs: Vec<f64> = coeffs
        .iter()
        .map(|a| if a.norm() > 0.0 { a.norm().ln() } else { f64::NEG_INFINITY })
        .collect();
    // upper convex hull of (k, log|a_k|), monotone chain
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..=n {
        if logs[k] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (j - i) as f64 * (logs[k] - logs[i]) - (k - i) as f64 * (logs[j] - logs[i]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut guesses = Vec::with_capacity(n);
    // zero roots at the origin come from leading zero coefficients
    for _ in 0..hull[0] {
        guesses.push(Complex64::new(0.0, 0.0));
    }
    for (seg, pair) in hull.windows(2).enumerate() {
        let (i, j) = (pair[0], pair[1]);
        let m = j - i;
        let radius = ((logs[i] - logs[j]) / m as f64).exp();
        let offset = 0.7 + 1.3 * seg as f64;
        for t in 0..m {
            let theta = std::f64::consts::TAU * t as f64 / m as f64 + offset / m as f64;
            guesses.push(Complex64::from_polar(radius, theta));
        }
    }
    guesses
}

/// `Σ_j 1 / (z − z_j)` with the `z_j` given by coordinates.
#[inline]
fn inverse_sum(xs: &[f64], ys: &[f64], z: Complex64) -> (f64, f64) {
    const LANES: usize = 8;
    let mut re = [0.0; LANES];
    let mut im = [0.0; LANES];
    let xc = xs.chunks_exact(LANES);
    let yc = ys.chunks_exact(LANES);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (x, y) in xc.zip(yc) {
        for l in 0..LANES {
            let dx = z.re - x[l];
            let dy = z.im - y[l];
            let inv = 1.0 / (dx * dx + dy * dy);
            re[l] += dx * inv;
            im[l] -= dy * inv;
        }
    }
    let mut a: f64 = re.iter().sum();
    let mut b: f64 = im.iter().sum();
    for (&x, &y) in xr.iter().zip(yr) {
        let dx = z.re - x;
        let dy = z.im - y;
        let inv = 1.0 / (dx * dx + dy * dy);
        a += dx * inv;
        b -= dy * inv;
    }
    (a, b)
}

/// All `N` roots of `Σ a_k z^k` (coefficients in ascending order).
pub(crate) fn aberth(coeffs: &[Complex64], opts: &AberthOptions) -> Result<Vec<Complex64>, RootFailure> {
    let n = coeffs.len() - 1;
    if coeffs[n].norm() < 1e-300 || !coeffs[n].norm().is_finite() {
        return Err(RootFailure::ZeroLeading);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let poly = Poly::new(coeffs);
    let mut z = initial_guesses(coeffs);
    // split storage so the pairwise sums vectorize
    let mut xs: Vec<f64> = z.iter().map(|v| v.re).collect();
    let mut ys: Vec<f64> = z.iter().map(|v| v.im).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut last_step = vec![f64::INFINITY; n];
    let mut iterations = 0;
    while !active.is_empty() {
        if iterations >= opts.max_iterations {
            return Err(RootFailure::NoConvergence { iterations, unconverged: active.len() });
        }
        iterations += 1;
        let mut still = Vec::with_capacity(active.len());
        for &i in &active {
            let zi = z[i];
            let e = poly.evaluate(zi);
            if e.relative_residual <= 16.0 * EPS {
                continue;
            }
            let (a, b) = inverse_sum(&xs[..i], &ys[..i], zi);
            let (c, d) = inverse_sum(&xs[i + 1..], &ys[i + 1..], zi);
            let sum = Complex64::new(a + c, b + d);
            let step = e.ratio / (Complex64::new(1.0, 0.0) - e.ratio * sum);
            let next = zi - step;
            if !(next.re.is_finite() && next.im.is_finite()) {
                // nudge a stuck approximation instead of propagating NaN
                z[i] = zi * Complex64::from_polar(1.0 + 1e-3, 0.1);
                xs[i] = z[i].re;
                ys[i] = z[i].im;
                still.push(i);
                continue;
            }
            z[i] = next;
            xs[i] = next.re;
            ys[i] = next.im;
            // near convergence rounding can make the iterate cycle, so a
            // tiny step that no longer shrinks also ends the iteration
            let h = step.norm();
            let stalled = h >= last_step[i] && h <= 1e-12 * next.norm().max(1.0);
            last_step[i] = h;
            if h > 4.0 * EPS * next.norm() && !stalled {
                still.push(i);
            }
        }
        active = still;
    }

    // Newton polish, kept only when it lowers the residual.
    let mut worst = 0.0f64;
    for zi in z.iter_mut() {
        let e = poly.evaluate(*zi);
        let mut res = e.relative_residual;
        let cand = *zi - e.ratio;
        let e2 = poly.evaluate(cand);
        if e2.relative_residual < res {
            *zi = cand;
            res = e2.relative_residual;
        }
        worst = worst.max(res);
    }
    if worst > opts.residual_tolerance {
        return Err(RootFailure::Residual { worst });
    }
    if let Some(distance) = closest_pair_below(&z, opts.separation) {
        return Err(RootFailure::Clustered { distance });
    }
    Ok(z)
}

/// Returns the distance of some pair closer than `sep`, if any.
fn closest_pair_below(z: &[Complex64], sep: f64) -> Option<f64> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].re.total_cmp(&z[b].re));
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if z[b].re - z[a].re >= sep {
                break;
            }
            let d = (z[a] - z[b]).norm();
            if d < sep {
                return Some(d);
            }
        }
    }
    None
}
