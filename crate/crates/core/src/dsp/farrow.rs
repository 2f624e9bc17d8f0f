//! Farrow-structure fractional-delay filter with Lagrange branches.
//!
//! Tap `k` of an order-`P` Lagrange interpolator for delay `b + mu`
//! (`b = (P - 1) / 2`, integer division) is a degree-`P` polynomial in `mu`.
//! The branch matrix holds those polynomial coefficients, so the filter for
//! any `mu` is obtained by evaluating `P + 1` fixed branch FIRs and combining
//! their outputs with Horner's rule.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{spectral, DiscreteSignal, DspError};

#[derive(Debug, Clone, PartialEq)]
pub struct FarrowFilter {
    order: usize,
    /// `branches[p][k]`: coefficient of `mu^p` in tap `k`.
    branches: Vec<Vec<f64>>,
}

/// Upper edge of the band over which the filter is expected to track the
/// ideal delay, in cycles per sample.
pub const IN_BAND_EDGE: f64 = 0.4;

impl FarrowFilter {
    pub fn new(order: usize) -> Result<Self, DspError> {
        if order == 0 {
            return Err(DspError::FarrowOrder(order));
        }
        let bulk = (order - 1) / 2;
        let mut branches = vec![vec![0.0; order + 1]; order + 1];
        for k in 0..=order {
            // prod over m != k of (bulk + mu - m) / (k - m), as a polynomial in mu
            let mut poly = vec![1.0];
            for m in (0..=order).filter(|&m| m != k) {
                let denom = k as f64 - m as f64;
                let shift = bulk as f64 - m as f64;
                let mut next = vec![0.0; poly.len() + 1];
                for (p, &c) in poly.iter().enumerate() {
                    next[p] += c * shift / denom;
                    next[p + 1] += c / denom;
                }
                poly = next;
            }
            for (p, &c) in poly.iter().enumerate() {
                branches[p][k] = c;
            }
        }
        Ok(Self { order, branches })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Fixed integer delay built into every instantiation, in samples.
    pub fn bulk_delay(&self) -> usize {
        (self.order - 1) / 2
    }

    pub fn branches(&self) -> &[Vec<f64>] {
        &self.branches
    }

    /// Instantiated taps for fractional offset `mu`.
    pub fn taps(&self, mu: f64) -> Vec<f64> {
        (0..=self.order)
            .map(|k| {
                self.branches
                    .iter()
                    .rev()
                    .fold(0.0, |acc, branch| acc * mu + branch[k])
            })
            .collect()
    }

    /// DTFT of the taps for offset `mu` at each normalized frequency.
    pub fn frequency_response(&self, mu: f64, freqs: &[f64]) -> Result<Vec<Complex64>, DspError> {
        check_offset(mu)?;
        let taps = self.taps(mu);
        Ok(freqs.iter().map(|&f| spectral::dtft(&taps, f)).collect())
    }

    /// Magnitude and phase-delay deviation from the ideal delay
    /// `bulk + mu` at frequency `f`.
    pub fn deviation(&self, mu: f64, f: f64) -> Result<ResponseError, DspError> {
        check_offset(mu)?;
        let h = spectral::dtft(&self.taps(mu), f);
        let ideal = self.bulk_delay() as f64 + mu;
        let residual = h * Complex64::from_polar(1.0, 2.0 * PI * f * ideal);
        let phase_delay = if f == 0.0 {
            0.0
        } else {
            -residual.arg() / (2.0 * PI * f)
        };
        Ok(ResponseError {
            magnitude: h.norm() - 1.0,
            phase_delay,
        })
    }

    /// Delay `signal` by `delay` samples: integer part as a shift, fraction
    /// through the branch bank. The output origin advances by
    /// `delay + bulk_delay()`.
    pub fn fractional_delay(
        &self,
        signal: &DiscreteSignal,
        delay: f64,
    ) -> Result<DiscreteSignal, DspError> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(DspError::NegativeDelay(delay));
        }
        let whole = delay.floor();
        let mu = delay - whole;
        let whole = whole as usize;
        let x = &signal.samples;
        let out_len = x.len() + whole + self.order;
        let zero = Complex64::new(0.0, 0.0);

        // branch outputs combined by Horner: y = (((v_P) mu + v_{P-1}) mu + ...) + v_0
        let mut y = vec![zero; out_len];
        for branch in self.branches.iter().rev() {
            for v in y.iter_mut() {
                *v *= mu;
            }
            for (n, &xn) in x.iter().enumerate() {
                if xn == zero {
                    continue;
                }
                for (k, &c) in branch.iter().enumerate() {
                    y[n + whole + k] += xn * c;
                }
            }
        }
        Ok(DiscreteSignal {
            samples: y,
            rate: signal.rate,
            origin: signal.origin + delay + self.bulk_delay() as f64,
        })
    }
}

fn check_offset(mu: f64) -> Result<(), DspError> {
    if (0.0..1.0).contains(&mu) {
        Ok(())
    } else {
        Err(DspError::FractionalOffset(mu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseError {
    /// `|H(f)| - 1`.
    pub magnitude: f64,
    /// Phase delay minus the ideal delay, in samples.
    pub phase_delay: f64,
}

/// Worst in-band errors over a set of offsets and frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelitySummary {
    pub max_magnitude: f64,
    pub max_phase_delay: f64,
}

pub fn in_band_fidelity(
    filter: &FarrowFilter,
    offsets: &[f64],
    band_edge: f64,
    points: usize,
) -> Result<FidelitySummary, DspError> {
    let mut summary = FidelitySummary {
        max_magnitude: 0.0,
        max_phase_delay: 0.0,
    };
    for &mu in offsets {
        for i in 0..=points {
            let f = -band_edge + 2.0 * band_edge * i as f64 / points as f64;
            let e = filter.deviation(mu, f)?;
            summary.max_magnitude = summary.max_magnitude.max(e.magnitude.abs());
            summary.max_phase_delay = summary.max_phase_delay.max(e.phase_delay.abs());
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook Lagrange taps for delay `d`.
    fn lagrange(order: usize, d: f64) -> Vec<f64> {
        (0..=order)
            .map(|k| {
                (0..=order)
                    .filter(|&m| m != k)
                    .map(|m| (d - m as f64) / (k as f64 - m as f64))
                    .product()
            })
            .collect()
    }

    /// Gain of the symmetric 4-tap half-sample interpolator.
    fn closed_gain(f: f64) -> f64 {
        (9.0 * (PI * f).cos() - (3.0 * PI * f).cos()) / 8.0
    }

    fn complex_tone(n: usize, f: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64))
            .collect()
    }

    #[test]
    fn cubic_branch_matrix() {
        let f = FarrowFilter::new(3).unwrap();
        assert_eq!(f.bulk_delay(), 1);
        // mu = 0 is a unit impulse at the bulk delay
        assert_eq!(f.taps(0.0), vec![0.0, 1.0, 0.0, 0.0]);
        let half = f.taps(0.5);
        let want = [-0.0625, 0.5625, 0.5625, -0.0625];
        for (a, b) in half.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn integer_delays_are_exact_shifts() {
        let f = FarrowFilter::new(7).unwrap();
        let x = DiscreteSignal::new(
            (0..40)
                .map(|i| Complex64::new(i as f64 * 0.1, 1.0 - i as f64))
                .collect(),
            2,
        );
        for d in [0.0, 5.0] {
            let y = f.fractional_delay(&x, d).unwrap();
            let shift = d as usize + f.bulk_delay();
            assert_eq!(y.origin, d + f.bulk_delay() as f64);
            for (n, v) in y.samples.iter().enumerate() {
                let want = if n >= shift && n - shift < 40 {
                    x.samples[n - shift]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((v - want).norm() < 1e-12, "d={d} n={n}");
            }
        }
    }

    #[test]
    fn half_sample_delay_on_tone() {
        let f = FarrowFilter::new(3).unwrap();
        let freq = 0.3;
        let x = DiscreteSignal::new(complex_tone(200, freq), 2);
        let y = f.fractional_delay(&x, 0.5).unwrap();
        // compare against the ideal delayed tone at the same output indices
        let total = 0.5 + f.bulk_delay() as f64;
        for n in 20..180 {
            let ideal = Complex64::from_polar(1.0, 2.0 * PI * freq * (n as f64 - total));
            let ratio = y.samples[n] / ideal;
            assert!(ratio.arg().abs() < 0.01, "phase {}", ratio.arg());
            assert!(
                (ratio.norm() - closed_gain(freq)).abs() < 1e-9,
                "gain {}",
                ratio.norm()
            );
        }
        // f = 0.3 lies outside the band a rate-2 signal occupies; a higher
        // order still tracks the ideal delay more closely there
        let closed_err = (closed_gain(freq) - 1.0).abs();
        let f7 = FarrowFilter::new(7).unwrap();
        let e7 = f7.deviation(0.5, freq).unwrap();
        assert!(e7.magnitude.abs() < closed_err / 2.0, "{e7:?}");
        assert!(e7.phase_delay.abs() < 1e-9);
    }

    #[test]
    fn negative_delay_and_bad_offset_rejected() {
        let f = FarrowFilter::new(3).unwrap();
        let x = DiscreteSignal::new(vec![Complex64::new(1.0, 0.0)], 2);
        assert_eq!(
            f.fractional_delay(&x, -0.1).unwrap_err(),
            DspError::NegativeDelay(-0.1)
        );
        assert!(f.frequency_response(1.0, &[0.0]).is_err());
        assert!(FarrowFilter::new(0).is_err());
    }

    #[test]
    fn mu_zero_response_is_pure_linear_phase() {
        let f = FarrowFilter::new(3).unwrap();
        let freqs: Vec<f64> = (0..=50).map(|i| -0.5 + i as f64 * 0.02).collect();
        let h = f.frequency_response(0.0, &freqs).unwrap();
        for (&fr, &v) in freqs.iter().zip(&h) {
            let want = Complex64::from_polar(1.0, -2.0 * PI * fr);
            assert!((v - want).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn branches_reproduce_lagrange(order in 1usize..10, mu in 0.0f64..1.0) {
            let f = FarrowFilter::new(order).unwrap();
            let want = lagrange(order, f.bulk_delay() as f64 + mu);
            for (a, b) in f.taps(mu).iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
            }
        }

        #[test]
        fn unit_dc_gain(order in 1usize..10, mu in 0.0f64..1.0) {
            let f = FarrowFilter::new(order).unwrap();
            let h = f.frequency_response(mu, &[0.0]).unwrap()[0];
            prop_assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
