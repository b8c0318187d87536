//! Periodic spectral operations on uniform grids over `[0, 1)`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let n = values.len() as f64;
    buf.iter_mut().for_each(|c| *c /= n);
    buf
}

fn inverse(mut coeffs: Vec<Complex64>) -> Vec<f64> {
    FftPlanner::new().plan_fft_inverse(coeffs.len()).process(&mut coeffs);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Signed wavenumber of FFT bin `k`; the Nyquist bin (even `n`) maps to 0
/// for odd operators so real data stays real.
fn wavenumber(k: usize, n: usize) -> (f64, bool) {
    if 2 * k == n {
        (k as f64, true)
    } else if 2 * k < n {
        (k as f64, false)
    } else {
        (k as f64 - n as f64, false)
    }
}

fn apply<F: Fn(f64, bool) -> Complex64>(values: &[f64], multiplier: F) -> Vec<f64> {
    let n = values.len();
    let mut coeffs = forward(values);
    for (k, c) in coeffs.iter_mut().enumerate() {
        let (m, nyquist) = wavenumber(k, n);
        *c *= multiplier(m, nyquist);
    }
    inverse(coeffs)
}

/// First derivative of the trigonometric interpolant.
pub fn derivative(values: &[f64]) -> Vec<f64> {
    apply(values, |m, nyquist| {
        if nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, TAU * m)
        }
    })
}

/// Second derivative of the trigonometric interpolant, Nyquist mode included.
pub fn second_derivative(values: &[f64]) -> Vec<f64> {
    apply(values, |m, _| Complex64::new(-(TAU * m).powi(2), 0.0))
}

/// Dense matrix of [`second_derivative`] on `n` points.
pub fn second_derivative_matrix(n: usize) -> nalgebra::DMatrix<f64> {
    let mut m = nalgebra::DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = second_derivative(&unit);
        unit[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Antiderivative vanishing at `x = 0` of the zero-mean part of `values`.
/// Also returns the removed mean.
pub fn antiderivative(values: &[f64]) -> (Vec<f64>, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut out = apply(values, |m, nyquist| {
        if m == 0.0 || nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / (TAU * m))
        }
    });
    let origin = out[0];
    out.iter_mut().for_each(|v| *v -= origin);
    (out, mean)
}

/// Samples of `f(x + c)` on the same grid.
pub fn shift(values: &[f64], c: f64) -> Vec<f64> {
    apply(values, |m, nyquist| {
        if nyquist {
            Complex64::new((TAU * m * c).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, TAU * m * c)
        }
    })
}

/// Samples of `f(-x)` on the same grid.
pub fn reflect(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n).map(|i| values[(n - i) % n]).collect()
}
