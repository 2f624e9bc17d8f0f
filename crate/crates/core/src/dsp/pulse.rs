//! Root-raised-cosine transmit pulse and its matched-filter cascade.
//!
//! The transmit pulse `phi` is a causal root-raised-cosine truncated to
//! `span` symbols and scaled to unit energy on the analog grid. The cascade
//! `rho = phi * phi` is then raised-cosine shaped and peaks at
//! `peak_time = span * T`, so `psi(t) = rho(t + peak_time)` is Nyquist.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spectral;
use super::DspError;

#[derive(Debug, Clone)]
pub struct PulseBank {
    beta: f64,
    span: usize,
    oversampling: usize,
    symbol_interval: f64,
    amplitude: f64,
    taps: Vec<f64>,
    cascade: Vec<f64>,
}

/// Unit-amplitude root-raised-cosine at `x = t / T`, centered at zero.
pub fn root_raised_cosine(x: f64, beta: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (x.abs() - 0.25 / beta).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

pub fn design_pulse(
    beta: f64,
    span: usize,
    oversampling: usize,
    symbol_interval: f64,
) -> Result<PulseBank, DspError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(DspError::RollOff(beta));
    }
    if span == 0 || !span.is_multiple_of(2) {
        return Err(DspError::Span(span));
    }
    if oversampling < 4 {
        return Err(DspError::Oversampling(oversampling));
    }
    if !(symbol_interval > 0.0 && symbol_interval.is_finite()) {
        return Err(DspError::SymbolInterval(symbol_interval));
    }
    let n = span * oversampling;
    let center = n as f64 / 2.0;
    let raw: Vec<f64> = (0..=n)
        .map(|i| root_raised_cosine((i as f64 - center) / oversampling as f64, beta))
        .collect();
    let dt = symbol_interval / oversampling as f64;
    let energy: f64 = raw.iter().map(|v| v * v).sum::<f64>() * dt;
    let amplitude = energy.sqrt().recip();
    let taps: Vec<f64> = raw.iter().map(|v| v * amplitude).collect();
    let cascade = real_convolve(&taps, &taps)
        .into_iter()
        .map(|v| v * dt)
        .collect();
    Ok(PulseBank {
        beta,
        span,
        oversampling,
        symbol_interval,
        amplitude,
        taps,
        cascade,
    })
}

fn real_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl PulseBank {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn symbol_interval(&self) -> f64 {
        self.symbol_interval
    }

    /// Analog grid spacing `T / O`.
    pub fn spacing(&self) -> f64 {
        self.symbol_interval / self.oversampling as f64
    }

    /// Transmit pulse samples on the analog grid, starting at `t = 0`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Cascade `rho = phi * phi` on the analog grid.
    pub fn cascade(&self) -> &[f64] {
        &self.cascade
    }

    pub fn peak_time(&self) -> f64 {
        self.span as f64 * self.symbol_interval
    }

    /// Grid index of the cascade peak.
    pub fn peak_index(&self) -> usize {
        self.span * self.oversampling
    }

    /// Continuous transmit pulse, zero outside `[0, span * T]`.
    pub fn phi(&self, t: f64) -> f64 {
        let x = t / self.symbol_interval;
        if !(-1e-9..=self.span as f64 + 1e-9).contains(&x) {
            return 0.0;
        }
        self.amplitude * root_raised_cosine(x - self.span as f64 / 2.0, self.beta)
    }

    /// `psi(t) = rho(t + peak_time)` at an arbitrary instant.
    ///
    /// Evaluated as a Riemann sum of the convolution integral against the
    /// continuous pulse; on-grid instants reproduce the discrete cascade.
    pub fn psi(&self, t: f64) -> f64 {
        let t = t + self.peak_time();
        let dt = self.spacing();
        self.taps
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.phi(t - i as f64 * dt))
            .sum::<f64>()
            * dt
    }

    /// `psi(m T - offset)` for each `m` in `ms`, sharing one evaluation of
    /// the shifted continuous pulse across all `m`.
    pub fn psi_series(&self, offset: f64, ms: std::ops::RangeInclusive<i64>) -> Vec<f64> {
        let dt = self.spacing();
        let o = self.oversampling as i64;
        let n = self.taps.len() as i64;
        let base = (offset / dt).floor() as i64;
        // shifted[j] = phi((j + base) dt - offset)
        let shifted: Vec<f64> = (0..=n)
            .map(|j| self.phi((j + base) as f64 * dt - offset))
            .collect();
        let peak = self.peak_index() as i64;
        ms.map(|m| {
            let top = m * o + peak - base;
            (0..n)
                .filter_map(|i| {
                    let j = top - i;
                    (0..=n)
                        .contains(&j)
                        .then(|| self.taps[i as usize] * shifted[j as usize])
                })
                .sum::<f64>()
                * dt
        })
        .collect()
    }

    /// Continuous-time spectrum `Phi(f)` of the sampled pulse (f in Hz).
    pub fn spectrum(&self, f: f64) -> Complex64 {
        spectral::dtft(&self.taps, f * self.spacing()) * self.spacing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 2.5e-9;

    fn bank() -> PulseBank {
        design_pulse(0.05, 128, 16, T).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            design_pulse(1.2, 16, 16, T).unwrap_err(),
            DspError::RollOff(1.2)
        );
        assert_eq!(
            design_pulse(0.1, 15, 16, T).unwrap_err(),
            DspError::Span(15)
        );
        assert_eq!(
            design_pulse(0.1, 16, 2, T).unwrap_err(),
            DspError::Oversampling(2)
        );
    }

    #[test]
    fn unit_energy_and_peak() {
        let b = bank();
        let e: f64 = b.taps().iter().map(|v| v * v).sum::<f64>() * b.spacing();
        assert!((e - 1.0).abs() < 1e-9);
        let (imax, _) = b
            .cascade()
            .iter()
            .enumerate()
            .max_by(|a, c| a.1.total_cmp(c.1))
            .unwrap();
        assert_eq!(imax, b.peak_index());
        assert!((b.cascade()[b.peak_index()] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cascade_is_nyquist() {
        let b = bank();
        let o = b.oversampling();
        let pk = b.peak_index();
        let worst = (1..=b.span())
            .flat_map(|n| [pk + n * o, pk - n * o])
            .map(|i| b.cascade()[i].abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn short_span_nyquist_is_truncation_limited() {
        // Span 16 at beta 0.05 leaves percent-level residual ISI.
        let b = design_pulse(0.05, 16, 16, T).unwrap();
        let pk = b.peak_index();
        assert!((b.cascade()[pk] - 1.0).abs() < 1e-3);
        let worst = (1..=8)
            .flat_map(|n| [pk + n * 16, pk - n * 16])
            .map(|i| b.cascade()[i].abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-2 && worst < 5e-2, "{worst}");
    }

    #[test]
    fn psi_on_grid_matches_cascade() {
        let b = bank();
        for k in [-40i64, -16, -3, 0, 1, 7, 33] {
            let idx = (b.peak_index() as i64 + k) as usize;
            let t = k as f64 * b.spacing();
            assert!((b.psi(t) - b.cascade()[idx]).abs() < 1e-12);
        }
        // smooth in between
        let mid = b.psi(0.5 * b.spacing());
        assert!(mid < 1.0 && mid > 0.99);
    }

    #[test]
    fn psi_series_matches_pointwise() {
        let b = design_pulse(0.05, 16, 8, T).unwrap();
        for offset in [0.0, 0.37 * T, -0.5 * T, 3.2 * T] {
            let series = b.psi_series(offset, -20..=20);
            for (m, v) in (-20..=20).zip(series) {
                let direct = b.psi(m as f64 * T - offset);
                assert!((v - direct).abs() < 1e-12, "m={m} {v} {direct}");
            }
        }
    }

    #[test]
    fn bandwidth_at_minus_60_db() {
        // The double-sided -60 dB bandwidth sits near (1 + beta) / T.
        let b = bank();
        let p0 = b.spectrum(0.0).norm_sqr();
        let edge = (0..4000)
            .map(|i| 0.45 / T + i as f64 * 0.0001 / T)
            .find(|&f| b.spectrum(f).norm_sqr() < p0 * 1e-6)
            .unwrap();
        let double_sided = 2.0 * edge;
        assert!(
            (double_sided * T - 1.05).abs() < 0.02,
            "{}",
            double_sided * T
        );
        assert!((double_sided / 1e6 - 420.0).abs() < 10.0);
    }

    #[test]
    fn zero_roll_off_is_band_limited() {
        let b = design_pulse(0.0, 96, 16, T).unwrap();
        let p0 = b.spectrum(0.0).norm_sqr();
        let p = b.spectrum(0.51 / T).norm_sqr();
        assert!(10.0 * (p / p0).log10() < -20.0);
    }
}
