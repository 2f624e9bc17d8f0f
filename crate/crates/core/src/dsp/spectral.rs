//! FFT-backed linear convolution and band-limited delay.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Zero samples appended beyond the required support before any circular
/// FFT operation, so sinc leakage from a fractional shift lands on zeros.
const GUARD: usize = 256;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn padded(x: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..x.len()].copy_from_slice(x);
    buf
}

/// Signed frequency (cycles per sample) of FFT bin `k` out of `n`.
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64 / n as f64
    } else {
        k as f64 / n as f64 - 1.0
    }
}

/// Full linear convolution `x * h`, length `x.len() + h.len() - 1`.
pub fn convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let (fwd, inv) = plans(n);
    let mut a = padded(x, n);
    let hc: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b = padded(&hc, n);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.truncate(out_len);
    a.iter_mut().for_each(|v| *v *= scale);
    a
}

/// Delay `x` by `delay` samples (any real value) with an exact phase ramp
/// `exp(-j 2 pi f delay)` on the zero-padded spectrum, returning `out_len`
/// samples starting at the original index 0.
///
/// Exact for content band-limited inside the Nyquist band; integer delays
/// reduce to a plain shift.
pub fn delay(x: &[Complex64], delay: f64, out_len: usize) -> Vec<Complex64> {
    let reach = x.len() + delay.abs().ceil() as usize;
    let n = (reach.max(out_len) + GUARD).next_power_of_two();
    let (fwd, inv) = plans(n);
    let mut buf = padded(x, n);
    fwd.process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = bin_frequency(k, n);
        *v *= Complex64::from_polar(1.0 / n as f64, -2.0 * PI * f * delay);
    }
    inv.process(&mut buf);
    buf.truncate(out_len);
    buf
}

/// In-place unitary DFT, `X[k] = n^{-1/2} sum x[i] exp(-j 2 pi k i / n)`.
pub fn dft_unitary(x: &mut [Complex64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    plans(n).0.process(x);
    let scale = (n as f64).sqrt().recip();
    x.iter_mut().for_each(|v| *v *= scale);
}

/// Inverse of [`dft_unitary`].
pub fn idft_unitary(x: &mut [Complex64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    plans(n).1.process(x);
    let scale = (n as f64).sqrt().recip();
    x.iter_mut().for_each(|v| *v *= scale);
}

/// Discrete-time Fourier transform of real taps at normalized frequency `f`.
pub fn dtft(taps: &[f64], f: f64) -> Complex64 {
    taps.iter()
        .enumerate()
        .map(|(k, &c)| Complex64::from_polar(c, -2.0 * PI * f * k as f64))
        .sum()
}
