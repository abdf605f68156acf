//! Spectral low-pass filtering and trigonometric interpolation of periodic samples.

use ndarray::{Array1, ArrayView1};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Result, SirmError};
use crate::real::Real;

fn forward<T: Real>(u: ArrayView1<'_, T>) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = u.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse_real<T: Real>(mut spec: Vec<Complex<T>>, scale: T) -> Array1<T> {
    FftPlanner::new().plan_fft_inverse(spec.len()).process(&mut spec);
    spec.into_iter().map(|c| c.re * scale).collect()
}

/// Keeps the wavenumbers `|k| ≤ n_modes − 1` of a real periodic signal.
pub fn fourier_filter<T: Real>(u: ArrayView1<'_, T>, n_modes: usize) -> Result<Array1<T>> {
    let n = u.len();
    if n_modes == 0 || n_modes > n / 2 {
        return Err(SirmError::InvalidParameter(format!(
            "mode count {n_modes} must lie in 1..={} for {n} samples",
            n / 2
        )));
    }
    let mut spec = forward(u);
    for (k, c) in spec.iter_mut().enumerate() {
        let wavenumber = k.min(n - k);
        if wavenumber >= n_modes {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
    Ok(inverse_real(spec, T::one() / T::from_count(n)))
}

/// Band-limited interpolation of `n` equispaced periodic samples onto `n_fine` points.
/// The Nyquist coefficient of an even-length input is split evenly between `±n/2`.
pub fn trigonometric_interpolation<T: Real>(u: ArrayView1<'_, T>, n_fine: usize) -> Result<Array1<T>> {
    let n = u.len();
    if n == 0 || n_fine < n {
        return Err(SirmError::InvalidParameter(format!(
            "cannot interpolate {n} samples onto {n_fine} points"
        )));
    }
    if n_fine == n {
        return Ok(u.to_owned());
    }
    let spec = forward(u);
    let zero = Complex::new(T::zero(), T::zero());
    let mut fine = vec![zero; n_fine];
    let half = n / 2;
    for k in 0..n {
        let c = spec[k];
        if n % 2 == 0 && k == half {
            let split = c * T::lit(0.5);
            fine[half] = split;
            fine[n_fine - half] = split;
        } else if k < (n + 1) / 2 {
            fine[k] = c;
        } else {
            fine[n_fine - (n - k)] = c;
        }
    }
    Ok(inverse_real(fine, T::one() / T::from_count(n)))
}
