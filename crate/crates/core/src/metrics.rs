//! Figures of merit: SINR, symbol error rate, spectral efficiency and PAPR.

use num_complex::Complex64;
use thiserror::Error;

use crate::beamforming::BeamformerSet;
use crate::channel::PathChannel;
use crate::dsp::PulseBank;
use crate::tx::{Scheme, TxFrame};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("negative SINR {0}")]
    NegativeSinr(f64),
    #[error("antenna {0} carries no power")]
    ZeroPower(usize),
    #[error("empty sample set")]
    Empty,
    #[error("overhead fraction {0} outside [0, 1)")]
    Overhead(f64),
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Desired, interference and noise powers with `gamma = d / (i + n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub desired: f64,
    pub interference: f64,
    pub noise: f64,
    pub gamma: f64,
}

impl SinrBreakdown {
    pub fn new(desired: f64, interference: f64, noise: f64) -> Self {
        Self {
            desired,
            interference,
            noise,
            gamma: desired / (interference + noise),
        }
    }

    pub fn gamma_db(&self) -> f64 {
        db(self.gamma)
    }

    /// Interference below desired power, in dB.
    pub fn interference_margin_db(&self) -> f64 {
        db(self.desired / self.interference)
    }
}

/// Symbol-spaced matched-filter response of the iDAM link,
/// `c[m] = sum_{l,l'} h_l^H f_l' psi(m T - (n_l - n_l') T - tau_f,l)`,
/// returned with the index of `m = 0`.
pub fn idam_response(
    ch: &PathChannel,
    bf: &BeamformerSet,
    bank: &PulseBank,
) -> (Vec<Complex64>, usize) {
    let t = ch.symbol_interval;
    let dec = ch.decompositions();
    response(ch, bf, bank, |l, lp| {
        (dec[l].integer - dec[lp].integer) as f64 * t + dec[l].fraction
    })
}

/// Same with ideal fractional compensation: offsets `tau_l - tau_l'`.
pub fn fdam_response(
    ch: &PathChannel,
    bf: &BeamformerSet,
    bank: &PulseBank,
) -> (Vec<Complex64>, usize) {
    response(ch, bf, bank, |l, lp| ch.delays[l] - ch.delays[lp])
}

fn response(
    ch: &PathChannel,
    bf: &BeamformerSet,
    bank: &PulseBank,
    offset: impl Fn(usize, usize) -> f64,
) -> (Vec<Complex64>, usize) {
    let t = ch.symbol_interval;
    let span = bank.span() as i64;
    let cross = bf.cross_gains(ch);
    let n = ch.paths();
    let offsets: Vec<f64> = (0..n * n).map(|i| offset(i / n, i % n)).collect();
    let spread = offsets.iter().fold(0.0f64, |a, o| a.max(o.abs()));
    let reach = span + (spread / t).ceil() as i64 + 2;
    let mut c = vec![Complex64::new(0.0, 0.0); (2 * reach + 1) as usize];
    for (i, &off) in offsets.iter().enumerate() {
        let lo = (off / t).floor() as i64 - span - 1;
        let hi = (off / t).ceil() as i64 + span + 1;
        let w = cross[i / n][i % n];
        for (m, v) in (lo..=hi).zip(bank.psi_series(off, lo..=hi)) {
            c[(m + reach) as usize] += w * v;
        }
    }
    (c, reach as usize)
}

fn breakdown(c: &[Complex64], zero: usize, noise: f64) -> SinrBreakdown {
    let isi = c
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != zero)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    SinrBreakdown::new(c[zero].norm_sqr(), isi, noise)
}

/// Analytic iDAM SINR with the ISI sum over the pulse support.
pub fn sinr_idam_analytic(
    ch: &PathChannel,
    bf: &BeamformerSet,
    bank: &PulseBank,
    noise: f64,
) -> SinrBreakdown {
    let (c, zero) = idam_response(ch, bf, bank);
    breakdown(&c, zero, noise)
}

/// Analytic fDAM SINR under ideal fractional delays. Under zero forcing the
/// cross terms vanish and this equals [`sinr_ideal`].
pub fn sinr_fdam_analytic(
    ch: &PathChannel,
    bf: &BeamformerSet,
    bank: &PulseBank,
    noise: f64,
) -> SinrBreakdown {
    let (c, zero) = fdam_response(ch, bf, bank);
    breakdown(&c, zero, noise)
}

/// ISI-free SNR `|sum_l h_l^H f_l|^2 / noise`.
pub fn sinr_ideal(ch: &PathChannel, bf: &BeamformerSet, noise: f64) -> SinrBreakdown {
    SinrBreakdown::new(bf.coherent_gain(ch).norm_sqr(), 0.0, noise)
}

/// Rate overhead of a scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadModel {
    pub scheme: Scheme,
    pub alpha: f64,
}

impl OverheadModel {
    /// Roll-off excess bandwidth, `beta / (1 + beta)`.
    pub fn dam(scheme: Scheme, beta: f64) -> Self {
        Self {
            scheme,
            alpha: beta / (1.0 + beta),
        }
    }

    /// Cyclic prefix, `N_cp / (N_sc + N_cp)`.
    pub fn ofdm(n_sc: usize, n_cp: usize) -> Self {
        Self {
            scheme: Scheme::Ofdm,
            alpha: n_cp as f64 / (n_sc + n_cp) as f64,
        }
    }

    pub fn efficiency(&self) -> f64 {
        1.0 - self.alpha
    }
}

/// `(1 - alpha)` times the mean of `log2(1 + gamma)` over `gammas`: one
/// value for DAM, one per subcarrier for OFDM.
pub fn spectral_efficiency(gammas: &[f64], overhead: OverheadModel) -> Result<f64, MetricsError> {
    if gammas.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(0.0..1.0).contains(&overhead.alpha) {
        return Err(MetricsError::Overhead(overhead.alpha));
    }
    if let Some(&g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(MetricsError::NegativeSinr(g));
    }
    let mean = gammas
        .iter()
        .map(|g| g.ln_1p() / std::f64::consts::LN_2)
        .sum::<f64>()
        / gammas.len() as f64;
    Ok(overhead.efficiency() * mean)
}

/// Peak over mean instantaneous power, in dB.
pub fn papr_db(x: &[Complex64]) -> Result<f64, MetricsError> {
    if x.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (peak, sum) = x
        .iter()
        .map(|v| v.norm_sqr())
        .fold((0.0f64, 0.0), |(p, s), v| (p.max(v), s + v));
    if sum == 0.0 {
        return Err(MetricsError::ZeroPower(0));
    }
    Ok(db(peak * x.len() as f64 / sum))
}

/// Per-antenna PAPR of the analog waveform over the frame body.
pub fn frame_papr(frame: &TxFrame, bank: &PulseBank) -> Result<Vec<f64>, MetricsError> {
    frame
        .antenna_waveforms(bank)
        .into_iter()
        .enumerate()
        .map(|(m, x)| {
            papr_db(&x[frame.body.clone()]).map_err(|e| match e {
                MetricsError::ZeroPower(_) => MetricsError::ZeroPower(m),
                other => other,
            })
        })
        .collect()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Level exceeded with probability `exceedance` on the empirical CCDF.
pub fn ccdf_level(samples: &[f64], exceedance: f64) -> Result<f64, MetricsError> {
    quantile(samples, 1.0 - exceedance)
}

/// Pooled symbol error rate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    pub errors: u64,
    pub symbols: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SerEstimate {
    pub fn overlaps(&self, other: &SerEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

pub fn wilson_interval(errors: u64, symbols: u64, z: f64) -> (f64, f64) {
    if symbols == 0 {
        return (0.0, 1.0);
    }
    let n = symbols as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let upper = if errors == symbols {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lower, upper)
}

/// Pool `(errors, symbols)` counts from several frames.
pub fn ser(counts: impl IntoIterator<Item = (u64, u64)>) -> SerEstimate {
    let (errors, symbols) = counts
        .into_iter()
        .fold((0, 0), |(e, n), (de, dn)| (e + de, n + dn));
    let (lower, upper) = wilson_interval(errors, symbols, Z_95);
    SerEstimate {
        errors,
        symbols,
        rate: if symbols == 0 {
            0.0
        } else {
            errors as f64 / symbols as f64
        },
        lower,
        upper,
    }
}
