use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::roots::poly_eval;
use super::GafError;

const MAX_BISECTIONS: u32 = 40;

/// Number of zeros of `Σ a_k z^k` inside `|z| < radius`, by the argument
/// principle.
///
/// The polynomial is sampled on the circle with one inverse FFT of the
/// scaled coefficients; any step whose phase increment exceeds `π/4` is
/// bisected with direct Horner evaluations until the increments are small
/// enough to unwrap unambiguously.
pub fn winding_count(coefficients: &[Complex64], radius: f64) -> Result<i64, GafError> {
    let n = coefficients.len();
    let m = (4 * n).max(1024).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut scale = 1.0;
    for (slot, a) in buf.iter_mut().zip(coefficients) {
        *slot = a * scale;
        scale *= radius;
    }
    // inverse transform computes Σ x_k e^{+2πi jk/m} = p(r e^{2πi j/m})
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);

    let at = |theta: f64| poly_eval(coefficients, Complex64::from_polar(radius, theta));
    let dtheta = TAU / m as f64;
    let mut total = 0.0;
    for j in 0..m {
        let v0 = buf[j];
        let v1 = buf[(j + 1) % m];
        total += refined_increment(&at, j as f64 * dtheta, (j + 1) as f64 * dtheta, v0, v1, 0);
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 || !w.is_finite() {
        return Err(GafError::WindingUnresolved { radius, value: w });
    }
    Ok(rounded as i64)
}

fn refined_increment<F: Fn(f64) -> Complex64>(
    at: &F,
    t0: f64,
    t1: f64,
    v0: Complex64,
    v1: Complex64,
    depth: u32,
) -> f64 {
    let d = (v1 / v0).arg();
    if d.abs() <= PI / 4.0 || depth >= MAX_BISECTIONS {
        return d;
    }
    let tm = 0.5 * (t0 + t1);
    let vm = at(tm);
    refined_increment(at, t0, tm, v0, vm, depth + 1) + refined_increment(at, tm, t1, vm, v1, depth + 1)
}
