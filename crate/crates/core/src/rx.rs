//! Receivers: matched filtering, symbol-instant sampling and detection for
//! DAM; CP removal, DFT and one-tap equalization for OFDM.

use num_complex::Complex64;
use thiserror::Error;

use crate::beamforming::{subcarrier_frequency, SubcarrierBeamformerSet};
use crate::channel::{AnalogGrid, PathChannel};
use crate::dsp::{self, spectral, DspError, PulseBank};
use crate::metrics::SinrBreakdown;
use crate::modulation::{detect_symbols, Detection, ModulationError, SymbolStream};
use crate::tx::{Scheme, TxFrame};

/// Residual sub-grid offsets below this many grid samples are ignored.
const ON_GRID: f64 = 1e-9;

/// Alias orders folded into the OFDM equivalent channel.
const ALIASES: i32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RxError {
    #[error("sampling instants [{first}, {last}] s fall outside the received grid")]
    OutsideGrid { first: f64, last: f64 },
    #[error("desired-signal correlation vanished")]
    Degenerate,
    #[error("payload and sample counts differ: {samples} samples, {symbols} symbols")]
    LengthMismatch { samples: usize, symbols: usize },
    #[error("{0} frames are not handled by this receiver")]
    Scheme(Scheme),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
}

/// Symbol-rate sampling instants `first + k period`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSchedule {
    pub first: f64,
    pub period: f64,
    pub count: usize,
}

impl SamplingSchedule {
    /// DAM schedule: frame latency plus `n_max T` (iDAM) or `tau_max` (fDAM);
    /// OFDM frames are sampled from the start of their first cyclic prefix.
    pub fn for_frame(frame: &TxFrame, ch: &PathChannel, n_cp: usize) -> Self {
        let t = frame.symbol_interval;
        match frame.scheme {
            Scheme::Idam => {
                let n_max = ch
                    .decompositions()
                    .iter()
                    .map(|d| d.integer)
                    .max()
                    .unwrap_or(0);
                Self {
                    first: frame.latency + n_max as f64 * t,
                    period: t,
                    count: frame.symbols,
                }
            }
            Scheme::Fdam => Self {
                first: frame.latency + ch.max_delay(),
                period: t,
                count: frame.symbols,
            },
            Scheme::Ofdm => Self {
                first: frame.latency - n_cp as f64 * t,
                period: t,
                count: frame.streams[0].len(),
            },
        }
    }
}

/// Raw matched-filter samples and the sub-grid shift applied to reach them.
#[derive(Debug, Clone, PartialEq)]
pub struct RxReport {
    pub samples: Vec<Complex64>,
    /// Offset of the first instant from the nearest grid point, in grid
    /// samples; interpolated exactly when nonzero.
    pub residual: f64,
}

/// Matched filter, then one sample per scheduled instant. Instants off the
/// grid are reached by an exact band-limited shift of the filter output.
pub fn receive_dam(
    y: &AnalogGrid,
    bank: &PulseBank,
    sched: &SamplingSchedule,
) -> Result<RxReport, RxError> {
    let r = dsp::matched_filter(y, bank)?;
    let dt = r.spacing();
    let pos = r.position(sched.first);
    let base = pos.round();
    let residual = if (pos - base).abs() > ON_GRID {
        pos - base
    } else {
        0.0
    };
    let stride = sched.period / dt;
    let last = base + stride * sched.count.saturating_sub(1) as f64;
    if base < 0.0 || last >= r.len() as f64 || (stride - stride.round()).abs() > ON_GRID {
        return Err(RxError::OutsideGrid {
            first: sched.first,
            last: sched.first + sched.period * sched.count.saturating_sub(1) as f64,
        });
    }
    let signal = &r.samples[0];
    let shifted;
    let source = if residual != 0.0 {
        shifted = spectral::delay(signal, -residual, signal.len());
        &shifted
    } else {
        signal
    };
    let (base, stride) = (base as usize, stride.round() as usize);
    Ok(RxReport {
        samples: (0..sched.count)
            .map(|k| source[base + k * stride])
            .collect(),
        residual,
    })
}

/// Least-squares coherent gain `sum r s* / sum |s|^2`.
pub fn coherent_gain_estimate(r: &[Complex64], s: &[Complex64]) -> Result<Complex64, RxError> {
    if r.len() != s.len() {
        return Err(RxError::LengthMismatch {
            samples: r.len(),
            symbols: s.len(),
        });
    }
    let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let corr: Complex64 = r.iter().zip(s).map(|(a, b)| a * b.conj()).sum();
    if energy == 0.0 || corr.norm() == 0.0 {
        return Err(RxError::Degenerate);
    }
    Ok(corr / energy)
}

/// Scale by `1 / gain`, then minimum-distance decisions against `reference`.
pub fn detect_scaled(
    r: &[Complex64],
    gain: &[Complex64],
    reference: &SymbolStream,
) -> Result<Detection, RxError> {
    let eq: Vec<Complex64> = r
        .iter()
        .enumerate()
        .map(|(i, v)| v / gain[i % gain.len()])
        .collect();
    Ok(detect_symbols(
        &eq,
        reference.constellation,
        Some(reference),
    )?)
}

/// Per-subcarrier equivalent gain after pulse shaping, channel, matched
/// filter and DFT, including spectral aliasing of the pulse:
/// `G_k = sqrt(budget) sum_a |Phi(f_k + a/T)|^2 / T g(f_k + a/T)^H w_k`.
pub fn ofdm_equivalent_gains(
    ch: &PathChannel,
    bf: &SubcarrierBeamformerSet,
    bank: &PulseBank,
    budget: f64,
) -> Vec<Complex64> {
    let n_sc = bf.vectors.len();
    let t = ch.symbol_interval;
    bf.vectors
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let f = subcarrier_frequency(k, n_sc, t);
            (-ALIASES..=ALIASES)
                .map(|a| {
                    let fa = f + a as f64 / t;
                    let weight = bank.spectrum(fa).norm_sqr() / t;
                    ch.frequency_response(fa).dotc(w) * weight
                })
                .sum::<Complex64>()
                * budget.sqrt()
        })
        .collect()
}

/// Drop each cyclic prefix and take the unitary DFT of every block.
pub fn ofdm_demodulate(
    r: &[Complex64],
    n_sc: usize,
    n_cp: usize,
) -> Result<Vec<Complex64>, RxError> {
    let per_block = n_sc + n_cp;
    if n_sc == 0 || !r.len().is_multiple_of(per_block) {
        return Err(RxError::LengthMismatch {
            samples: r.len(),
            symbols: n_sc,
        });
    }
    let mut out = Vec::with_capacity(r.len() / per_block * n_sc);
    for block in r.chunks(per_block) {
        let mut b = block[n_cp..].to_vec();
        spectral::dft_unitary(&mut b);
        out.extend(b);
    }
    Ok(out)
}

/// Matched filter, symbol-rate sampling, CP removal and DFT.
pub fn receive_ofdm(
    y: &AnalogGrid,
    bank: &PulseBank,
    sched: &SamplingSchedule,
    n_sc: usize,
    n_cp: usize,
) -> Result<Vec<Complex64>, RxError> {
    let report = receive_dam(y, bank, sched)?;
    ofdm_demodulate(&report.samples, n_sc, n_cp)
}

/// SINR from a paired noiseless/noisy run on the same frame: desired power
/// from correlation with the payload, interference from the noiseless
/// residual, noise from the noisy-minus-noiseless difference.
pub fn measure_sinr_empirical(
    noiseless: &[Complex64],
    noisy: &[Complex64],
    reference: &[Complex64],
) -> Result<SinrBreakdown, RxError> {
    if noiseless.len() != reference.len() || noisy.len() != reference.len() {
        return Err(RxError::LengthMismatch {
            samples: noiseless.len().min(noisy.len()),
            symbols: reference.len(),
        });
    }
    let n = reference.len() as f64;
    let g = coherent_gain_estimate(noiseless, reference)?;
    let sym_power = reference.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    let interference = noiseless
        .iter()
        .zip(reference)
        .map(|(r, s)| (r - g * s).norm_sqr())
        .sum::<f64>()
        / n;
    let noise = noisy
        .iter()
        .zip(noiseless)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n;
    Ok(SinrBreakdown::new(
        g.norm_sqr() * sym_power,
        interference,
        noise,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{ofdm_mrt_beamformers, zf_beamformers, Beamformer, BeamformerSet};
    use crate::channel::{add_awgn, generate_channel, CVector};
    use crate::dsp::{design_pulse, FarrowFilter};
    use crate::metrics::{db, sinr_idam_analytic};
    use crate::modulation::{map_bits_to_symbols, random_bits, Constellation};
    use crate::rng::Seed;
    use crate::tx::{plan_fdam, plan_idam, propagate, transmit_fdam, transmit_idam, transmit_ofdm};

    const T: f64 = 2.5e-9;

    fn symbols(n: usize, seed: u64) -> SymbolStream {
        let bits = random_bits(&mut Seed(seed).rng(&[1]), 4 * n);
        map_bits_to_symbols(&bits, Constellation::Qam16).unwrap()
    }

    fn bank() -> PulseBank {
        design_pulse(0.05, 128, 16, T).unwrap()
    }

    fn interior(n: usize) -> std::ops::Range<usize> {
        128..n - 128
    }

    #[test]
    fn single_path_idam_samples_are_scaled_symbols() {
        let bank = bank();
        let h = CVector::from_vec(vec![Complex64::new(0.3, 0.4), Complex64::new(-1.0, 0.2)]);
        let ch = PathChannel::new(vec![h.clone()], vec![17.0 * T], T).unwrap();
        let bf = BeamformerSet {
            kind: Beamformer::Mrt,
            vectors: vec![h.clone() * Complex64::new(0.0, 0.7)],
            budget: 1.0,
        };
        let s = symbols(400, 1);
        let frame = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let y = propagate(&frame, &ch, &bank).unwrap();
        let sched = SamplingSchedule::for_frame(&frame, &ch, 0);
        let rx = receive_dam(&y, &bank, &sched).unwrap();
        assert_eq!(rx.residual, 0.0);
        let g = h.dotc(&bf.vectors[0]);
        let errs: Vec<f64> = interior(400)
            .map(|k| (rx.samples[k] - g * s.symbols[k]).norm() / g.norm())
            .collect();
        // truncation floor: RMS below 1e-3, a few symbols slightly above
        let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        assert!(rms < 1e-3, "{rms}");
        assert!(errs.iter().all(|&e| e < 3e-3));
    }

    fn evm(r: &[Complex64], s: &[Complex64]) -> f64 {
        let g = coherent_gain_estimate(r, s).unwrap();
        let e: f64 = r.iter().zip(s).map(|(a, b)| (a - g * b).norm_sqr()).sum();
        e / (g.norm_sqr() * s.iter().map(|v| v.norm_sqr()).sum::<f64>())
    }

    #[test]
    fn fdam_noiseless_is_isi_free_and_beats_idam() {
        let bank = bank();
        let farrow = FarrowFilter::new(9).unwrap();
        let ch = generate_channel(64, 3, T, (0.0, 200.0 * T), &mut Seed(21).rng(&[0])).unwrap();
        let bf = zf_beamformers(&ch, T).unwrap();
        let s = symbols(1024 + 256, 2);
        let fd = transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).unwrap();
        let y = propagate(&fd, &ch, &bank).unwrap();
        let rx = receive_dam(&y, &bank, &SamplingSchedule::for_frame(&fd, &ch, 0)).unwrap();
        let body = interior(s.len());
        let reference = s.slice(body.clone());
        let g = coherent_gain_estimate(&rx.samples[body.clone()], &reference.symbols).unwrap();
        let det = detect_scaled(&rx.samples[body.clone()], &[g], &reference).unwrap();
        assert_eq!(det.errors, 0);
        let evm_f = evm(&rx.samples[body.clone()], &reference.symbols);
        assert!(db(evm_f) < -40.0, "{}", db(evm_f));

        let id = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let y = propagate(&id, &ch, &bank).unwrap();
        let rx = receive_dam(&y, &bank, &SamplingSchedule::for_frame(&id, &ch, 0)).unwrap();
        let evm_i = evm(&rx.samples[body.clone()], &reference.symbols);
        assert!(db(evm_i) - db(evm_f) > 20.0, "{} {}", db(evm_i), db(evm_f));
    }

    #[test]
    fn integer_delay_idam_matches_ideal_snr() {
        let bank = bank();
        let ch = generate_channel(64, 3, T, (0.0, 200.0 * T), &mut Seed(22).rng(&[0]))
            .unwrap()
            .with_integer_delays();
        let bf = zf_beamformers(&ch, T).unwrap();
        let noise = bf.coherent_gain(&ch).norm_sqr() / 100.0;
        let s = symbols(4096, 3);
        let frame = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let y0 = propagate(&frame, &ch, &bank).unwrap();
        let y1 = add_awgn(&y0, noise, &mut Seed(5).rng(&[9])).unwrap();
        let sched = SamplingSchedule::for_frame(&frame, &ch, 0);
        let r0 = receive_dam(&y0, &bank, &sched).unwrap().samples;
        let r1 = receive_dam(&y1, &bank, &sched).unwrap().samples;
        let body = interior(s.len());
        let m =
            measure_sinr_empirical(&r0[body.clone()], &r1[body.clone()], &s.symbols[body]).unwrap();
        assert!((m.gamma_db() - 20.0).abs() < 0.2, "{}", m.gamma_db());
    }

    #[test]
    fn fractional_idam_matches_analytic() {
        let bank = bank();
        for seed in 0..4 {
            let ch = generate_channel(64, 3, T, (0.0, 200.0 * T), &mut Seed(30 + seed).rng(&[0]))
                .unwrap();
            let bf = zf_beamformers(&ch, T).unwrap();
            let noise = bf.coherent_gain(&ch).norm_sqr() / 100.0;
            let s = symbols(1024 + 256, seed);
            let frame = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
            let y0 = propagate(&frame, &ch, &bank).unwrap();
            let y1 = add_awgn(&y0, noise, &mut Seed(seed).rng(&[7])).unwrap();
            let sched = SamplingSchedule::for_frame(&frame, &ch, 0);
            let r0 = receive_dam(&y0, &bank, &sched).unwrap().samples;
            let r1 = receive_dam(&y1, &bank, &sched).unwrap().samples;
            let body = interior(s.len());
            let m = measure_sinr_empirical(&r0[body.clone()], &r1[body.clone()], &s.symbols[body])
                .unwrap();
            let a = sinr_idam_analytic(&ch, &bf, &bank, noise);
            assert!(
                (m.gamma_db() - a.gamma_db()).abs() < 0.5,
                "{} {}",
                m.gamma_db(),
                a.gamma_db()
            );
        }
    }

    #[test]
    fn ofdm_noiseless_flat_channel() {
        let bank = bank();
        let h = CVector::from_element(1, Complex64::new(1.0, 0.0));
        let ch = PathChannel::new(vec![h], vec![0.0], T).unwrap();
        let bf = ofdm_mrt_beamformers(&ch, 256).unwrap();
        let s = symbols(512, 4);
        let frame = transmit_ofdm(&s, &bf, 1.0, 256, 32, &bank).unwrap();
        let y = propagate(&frame, &ch, &bank).unwrap();
        let sched = SamplingSchedule::for_frame(&frame, &ch, 32);
        let z = receive_ofdm(&y, &bank, &sched, 256, 32).unwrap();
        let g = ofdm_equivalent_gains(&ch, &bf, &bank, 1.0);
        let det = detect_scaled(&z, &g, &s).unwrap();
        assert_eq!(det.errors, 0);
    }

    #[test]
    fn ofdm_edge_subcarriers_attenuated() {
        let bank = bank();
        let ch = generate_channel(16, 3, T, (0.0, 200.0 * T), &mut Seed(40).rng(&[0])).unwrap();
        let bf = ofdm_mrt_beamformers(&ch, 1024).unwrap();
        let g = ofdm_equivalent_gains(&ch, &bf, &bank, 1.0);
        // relative to the unfiltered MRT gain ||g_k||
        let ratio: Vec<f64> = g.iter().zip(&bf.gains).map(|(a, b)| a.norm() / b).collect();
        let center: f64 = ratio[..100].iter().sum::<f64>() / 100.0;
        let edge: f64 = ratio[492..532].iter().sum::<f64>() / 40.0;
        assert!((center - 1.0).abs() < 1e-3, "{center}");
        assert!(edge < center, "{edge} {center}");
    }

    #[test]
    fn ofdm_equalized_matches_equivalent_gains() {
        let bank = bank();
        let ch = generate_channel(8, 3, T, (0.0, 200.0 * T), &mut Seed(41).rng(&[0])).unwrap();
        let bf = ofdm_mrt_beamformers(&ch, 1024).unwrap();
        let s = symbols(1024, 6);
        let frame = transmit_ofdm(&s, &bf, T, 1024, 200, &bank).unwrap();
        let y = propagate(&frame, &ch, &bank).unwrap();
        let z = receive_ofdm(
            &y,
            &bank,
            &SamplingSchedule::for_frame(&frame, &ch, 200),
            1024,
            200,
        )
        .unwrap();
        let g = ofdm_equivalent_gains(&ch, &bf, &bank, T);
        let eq: Vec<Complex64> = z.iter().zip(&g).map(|(a, b)| a / b).collect();
        // interior subcarriers: residual well below the decision distance
        let worst = (0..1024)
            .filter(|&k| !(480..544).contains(&k))
            .map(|k| (eq[k] - s.symbols[k]).norm())
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "{worst}");
        // the per-subcarrier gain is not flat over a multipath channel
        let mags: Vec<f64> = g.iter().map(|v| v.norm()).collect();
        let (lo, hi) = mags[..400]
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo > 1.5);
    }

    #[test]
    fn noise_calibration() {
        let bank = bank();
        let n = 100_000;
        let sigma2 = 0.37;
        let y = AnalogGrid::scalar(vec![Complex64::new(0.0, 0.0); (n + 200) * 16], 16, T, 0.0);
        let noisy = add_awgn(&y, sigma2, &mut Seed(11).rng(&[0])).unwrap();
        let sched = SamplingSchedule {
            first: bank.peak_time() + 4.0 * T,
            period: T,
            count: n,
        };
        let r = receive_dam(&noisy, &bank, &sched).unwrap().samples;
        let var = r.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((var / sigma2 - 1.0).abs() < 0.02, "{}", var / sigma2);
        let rho = r.windows(2).map(|w| w[1] * w[0].conj()).sum::<Complex64>() / (n as f64 * var);
        assert!(rho.norm() < 0.05);
    }

    #[test]
    fn schedule_outside_grid_rejected() {
        let bank = design_pulse(0.05, 16, 16, T).unwrap();
        let y = AnalogGrid::scalar(vec![Complex64::new(0.0, 0.0); 160], 16, T, 0.0);
        let sched = SamplingSchedule {
            first: 0.0,
            period: T,
            count: 1000,
        };
        assert!(matches!(
            receive_dam(&y, &bank, &sched),
            Err(RxError::OutsideGrid { .. })
        ));
        assert_eq!(
            coherent_gain_estimate(&[Complex64::new(0.0, 0.0)], &[Complex64::new(1.0, 0.0)]),
            Err(RxError::Degenerate)
        );
    }
}
