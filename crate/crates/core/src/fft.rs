//! Thin wrappers over `rustfft` for sampling analytic polynomials on the
//! roots of unity and reading coefficients back off a grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// `values[k] = sum_j c_j exp(2 pi i e_j k / n)`.
///
/// Exponents at or above `n` are folded modulo `n`, which is exact for
/// sampling at the `n`-th roots of unity.
pub fn sample_terms(terms: &[(u64, Complex64)], n: usize) -> Vec<Complex64> {
    assert!(n > 0, "grid size must be positive");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for &(e, c) in terms {
        buf[(e % n as u64) as usize] += c;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Discrete Fourier coefficients `(1/n) sum_k v_k exp(-2 pi i j k / n)`.
pub fn grid_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    for v in &mut buf {
        *v *= inv;
    }
    buf
}

/// Grid angle `2 pi k / n`.
#[inline]
pub fn grid_angle(k: usize, n: usize) -> f64 {
    std::f64::consts::TAU * k as f64 / n as f64
}

/// Unit-circle grid point `exp(2 pi i k / n)`.
#[inline]
pub fn grid_point(k: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, grid_angle(k, n))
}
