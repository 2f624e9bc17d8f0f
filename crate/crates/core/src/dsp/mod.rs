//! Signal-processing primitives: pulse shaping, upsampling, fractional
//! delay and matched filtering.

mod farrow;
mod pulse;
pub mod spectral;

pub use farrow::{in_band_fidelity, FarrowFilter, FidelitySummary, ResponseError, IN_BAND_EDGE};
pub use pulse::{design_pulse, root_raised_cosine, PulseBank};

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::AnalogGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("roll-off {0} outside [0, 1]")]
    RollOff(f64),
    #[error("pulse span {0} must be a positive even number of symbols")]
    Span(usize),
    #[error("grid oversampling {0} must be at least 4")]
    Oversampling(usize),
    #[error("symbol interval {0} must be positive")]
    SymbolInterval(f64),
    #[error("Farrow order {0} must be at least 1")]
    FarrowOrder(usize),
    #[error("fractional offset {0} outside [0, 1)")]
    FractionalOffset(f64),
    #[error("negative delay {0}")]
    NegativeDelay(f64),
    #[error("grid rate mismatch: signal has {signal} samples/symbol, pulse bank {bank}")]
    RateMismatch { signal: usize, bank: usize },
    #[error("upsampling factor must be at least 1")]
    UpsamplingFactor,
}

/// Discrete-time signal at `rate` samples per symbol. `origin` is the
/// (possibly fractional) sample index at which symbol 0 sits.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignal {
    pub samples: Vec<Complex64>,
    pub rate: usize,
    pub origin: f64,
}

impl DiscreteSignal {
    pub fn new(samples: Vec<Complex64>, rate: usize) -> Self {
        Self {
            samples,
            rate,
            origin: 0.0,
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Zero-insertion upsampling: `out[n Q] = in[n]`, zeros elsewhere.
pub fn upsample(signal: &DiscreteSignal, factor: usize) -> Result<DiscreteSignal, DspError> {
    if factor == 0 {
        return Err(DspError::UpsamplingFactor);
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); signal.samples.len() * factor];
    for (i, &v) in signal.samples.iter().enumerate() {
        samples[i * factor] = v;
    }
    Ok(DiscreteSignal {
        samples,
        rate: signal.rate * factor,
        origin: signal.origin * factor as f64,
    })
}

/// Smallest upsampling factor keeping a raised-cosine band of roll-off
/// `beta` inside the fractional-delay filter's accurate band,
/// `Q >= 1.25 (1 + beta)`.
pub fn choose_upsampling_factor(beta: f64) -> usize {
    // round first so 1.25 * 1.6 lands on 2 rather than 2.0000000000000004
    let bound = (1.25 * (1.0 + beta) * 1e9).round() / 1e9;
    (bound.ceil() as usize).max(1)
}

/// Pulse-shape a discrete sequence onto the analog grid:
/// `out(i dt) = sum_j x[j] phi(i dt - j T / rate - offset dt)`.
///
/// `offset` is the grid index of sample 0; the grid rate must be a multiple
/// of `rate`.
pub fn pulse_shape(
    samples: &[Complex64],
    rate: usize,
    bank: &PulseBank,
    offset: usize,
    out_len: usize,
) -> Vec<Complex64> {
    let step = bank.oversampling() / rate;
    let zero = Complex64::new(0.0, 0.0);
    let used = samples
        .len()
        .min(out_len.saturating_sub(offset).div_ceil(step));
    let mut stuffed = vec![zero; offset + used * step];
    for (j, &x) in samples[..used].iter().enumerate() {
        stuffed[offset + j * step] = x;
    }
    let mut out = spectral::convolve(&stuffed, bank.taps());
    out.resize(out_len, zero);
    out
}

/// Receive matched filter `r(t) = y(t) * phi(t)`, evaluated as a grid
/// Riemann sum so that unit-energy filtering preserves the noise PSD.
/// Output starts at the input start time and keeps the full tail.
pub fn matched_filter(y: &AnalogGrid, bank: &PulseBank) -> Result<AnalogGrid, DspError> {
    if y.oversampling != bank.oversampling() {
        return Err(DspError::RateMismatch {
            signal: y.oversampling,
            bank: bank.oversampling(),
        });
    }
    let dt = bank.spacing();
    let taps: Vec<f64> = bank.taps().iter().map(|v| v * dt).collect();
    let samples = y
        .samples
        .iter()
        .map(|ch| spectral::convolve(ch, &taps))
        .collect();
    Ok(AnalogGrid {
        samples,
        oversampling: y.oversampling,
        symbol_interval: y.symbol_interval,
        start: y.start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 2.5e-9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn upsample_definition() {
        let s = DiscreteSignal::new(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], 1);
        let u = upsample(&s, 2).unwrap();
        let z = c(0.0, 0.0);
        assert_eq!(
            u.samples,
            vec![c(1.0, 0.0), z, c(0.0, 1.0), z, c(-1.0, 0.0), z]
        );
        assert_eq!(u.rate, 2);
        assert_eq!(upsample(&s, 1).unwrap(), s);
        assert_eq!(u.energy(), s.energy());
        assert_eq!(upsample(&s, 0), Err(DspError::UpsamplingFactor));
    }

    #[test]
    fn upsampling_factor_bound() {
        assert_eq!(choose_upsampling_factor(0.05), 2);
        assert_eq!(choose_upsampling_factor(0.6), 2);
        assert_eq!(choose_upsampling_factor(0.9), 3);
        assert_eq!(choose_upsampling_factor(1.0), 3);
        assert_eq!(choose_upsampling_factor(0.0), 2);
    }

    #[test]
    fn impulse_through_matched_filter_is_pulse() {
        let bank = design_pulse(0.25, 8, 8, T).unwrap();
        let mut x = vec![c(0.0, 0.0); 20];
        x[0] = c(1.0 / bank.spacing(), 0.0);
        let y = AnalogGrid::scalar(x, 8, T, 0.0);
        let r = matched_filter(&y, &bank).unwrap();
        for (a, &b) in r.samples[0].iter().zip(bank.taps()) {
            assert!((a.re - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn pulse_through_matched_filter_is_cascade() {
        let bank = design_pulse(0.25, 8, 8, T).unwrap();
        let x = pulse_shape(&[c(1.0, 0.0)], 1, &bank, 0, bank.taps().len());
        let r = matched_filter(&AnalogGrid::scalar(x, 8, T, 0.0), &bank).unwrap();
        let peak = r.samples[0]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, bank.peak_index());
        for (a, &b) in r.samples[0].iter().zip(bank.cascade()) {
            assert!((a.re - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_mismatch_rejected() {
        let bank = design_pulse(0.25, 8, 8, T).unwrap();
        let y = AnalogGrid::scalar(vec![c(0.0, 0.0); 4], 16, T, 0.0);
        assert_eq!(
            matched_filter(&y, &bank).unwrap_err(),
            DspError::RateMismatch {
                signal: 16,
                bank: 8
            }
        );
    }

    #[test]
    fn pulse_shape_at_rate_q_interleaves() {
        let bank = design_pulse(0.25, 8, 8, T).unwrap();
        let x = [c(1.0, 0.0), c(2.0, 0.0)];
        let y = pulse_shape(&x, 2, &bank, 3, 100);
        for i in 0..100 {
            let t = i as f64 * bank.spacing();
            let want = bank.phi(t - 3.0 * bank.spacing())
                + 2.0 * bank.phi(t - 3.0 * bank.spacing() - T / 2.0);
            assert!((y[i].re - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }
}
