//! Transmitter chains: integer DAM, fractional DAM and pulse-shaped CP-OFDM.
//!
//! A frame is held as a few discrete streams plus an antenna mixing matrix,
//! so per-antenna waveforms are only materialized when asked for. Symbol 0
//! of every frame reaches the matched-filter peak `latency` seconds after
//! the grid origin when the channel is a single zero-delay path.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::beamforming::{BeamformerSet, SubcarrierBeamformerSet};
use crate::channel::{AnalogGrid, CMatrix, ChannelError, PathChannel};
use crate::dsp::{
    self, choose_upsampling_factor, spectral, DiscreteSignal, DspError, FarrowFilter, PulseBank,
};
use crate::modulation::SymbolStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TxError {
    #[error("iDAM needs integer compensation, got {0}")]
    NonIntegerPlan(f64),
    #[error("plan has {plan} entries, beamformer set {beamformers}")]
    PlanMismatch { plan: usize, beamformers: usize },
    #[error("upsampling factor {q} below the bound ceil(1.25 (1 + beta)) = {min}")]
    UpsamplingBound { q: usize, min: usize },
    #[error("grid oversampling {oversampling} is not a multiple of Q = {q}")]
    GridRate { oversampling: usize, q: usize },
    #[error("payload of {payload} symbols is not a whole number of {n_sc}-subcarrier blocks")]
    PayloadBlocks { payload: usize, n_sc: usize },
    #[error("{vectors} subcarrier beamformers for {n_sc} subcarriers")]
    SubcarrierMismatch { vectors: usize, n_sc: usize },
    #[error("empty payload")]
    EmptyPayload,
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Idam,
    Fdam,
    Ofdm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Idam, Scheme::Fdam, Scheme::Ofdm];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Idam => "idam",
            Scheme::Fdam => "fdam",
            Scheme::Ofdm => "ofdm",
        }
    }

    pub fn is_dam(self) -> bool {
        self != Scheme::Ofdm
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "idam" => Ok(Scheme::Idam),
            "fdam" => Ok(Scheme::Fdam),
            "ofdm" => Ok(Scheme::Ofdm),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// Per-path delay compensation in symbol intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationPlan {
    pub shifts: Vec<f64>,
}

impl CompensationPlan {
    pub fn max(&self) -> f64 {
        self.shifts.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_integer(&self) -> bool {
        self.shifts.iter().all(|s| s.fract() == 0.0)
    }
}

/// `kappa_l = n_max - n_l` from the rounded path delays.
pub fn plan_idam(ch: &PathChannel) -> CompensationPlan {
    let taps: Vec<i64> = ch.decompositions().iter().map(|d| d.integer).collect();
    let n_max = taps.iter().copied().max().unwrap_or(0);
    CompensationPlan {
        shifts: taps.iter().map(|&n| (n_max - n) as f64).collect(),
    }
}

/// `zeta_l = (tau_max - tau_l) / T`.
pub fn plan_fdam(ch: &PathChannel) -> CompensationPlan {
    let tau_max = ch.max_delay();
    CompensationPlan {
        shifts: ch
            .delays
            .iter()
            .map(|&tau| (tau_max - tau) / ch.symbol_interval)
            .collect(),
    }
}

/// Transmit frame: antenna `m` carries `sum_s mixing[(m, s)] streams[s]`,
/// pulse-shaped at `rate` samples per symbol onto a grid of `grid_len`
/// samples at `oversampling` samples per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub scheme: Scheme,
    pub streams: Vec<Vec<Complex64>>,
    pub rate: usize,
    pub mixing: CMatrix,
    pub oversampling: usize,
    pub symbol_interval: f64,
    pub grid_len: usize,
    /// Seconds from the grid origin to the matched-filter peak of symbol 0
    /// through a zero-delay channel.
    pub latency: f64,
    /// Grid indices where every stream is in steady state.
    pub body: Range<usize>,
    pub symbols: usize,
}

impl TxFrame {
    pub fn antennas(&self) -> usize {
        self.mixing.nrows()
    }

    /// Discrete sequence of antenna `m` at `rate`.
    pub fn antenna_sequence(&self, m: usize) -> Vec<Complex64> {
        combine(&self.streams, |s| self.mixing[(m, s)])
    }

    pub fn antenna_waveform(&self, m: usize, bank: &PulseBank) -> Vec<Complex64> {
        dsp::pulse_shape(&self.antenna_sequence(m), self.rate, bank, 0, self.grid_len)
    }

    /// Every antenna waveform. Shapes the streams once and mixes when there
    /// are fewer streams than antennas.
    pub fn antenna_waveforms(&self, bank: &PulseBank) -> Vec<Vec<Complex64>> {
        if self.streams.len() >= self.antennas() {
            return (0..self.antennas())
                .map(|m| self.antenna_waveform(m, bank))
                .collect();
        }
        let shaped: Vec<Vec<Complex64>> = self
            .streams
            .iter()
            .map(|s| dsp::pulse_shape(s, self.rate, bank, 0, self.grid_len))
            .collect();
        (0..self.antennas())
            .map(|m| combine(&shaped, |s| self.mixing[(m, s)]))
            .collect()
    }

    /// Every antenna on the analog grid.
    pub fn analog(&self, bank: &PulseBank) -> AnalogGrid {
        AnalogGrid {
            samples: self.antenna_waveforms(bank),
            oversampling: self.oversampling,
            symbol_interval: self.symbol_interval,
            start: 0.0,
        }
    }
}

fn combine(streams: &[Vec<Complex64>], weight: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    let len = streams.first().map_or(0, Vec::len);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (s, stream) in streams.iter().enumerate() {
        let w = weight(s);
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(stream) {
            *o += w * x;
        }
    }
    out
}

/// Noise-free received signal `sum_l h_l^H x(t - tau_l)`.
///
/// Equal to `apply_channel(&frame.analog(bank), ch)` but combines the
/// streams per path before pulse shaping.
pub fn propagate(
    frame: &TxFrame,
    ch: &PathChannel,
    bank: &PulseBank,
) -> Result<AnalogGrid, TxError> {
    if frame.antennas() != ch.antennas() {
        return Err(ChannelError::AntennaMismatch {
            grid: frame.antennas(),
            channel: ch.antennas(),
        }
        .into());
    }
    if bank.oversampling() != frame.oversampling {
        return Err(DspError::RateMismatch {
            signal: frame.oversampling,
            bank: bank.oversampling(),
        }
        .into());
    }
    let dt = bank.spacing();
    let out_len = frame.grid_len + (ch.max_delay() / dt).ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (h, &tau) in ch.gains.iter().zip(&ch.delays) {
        let weights = h.adjoint() * &frame.mixing;
        let seq = combine(&frame.streams, |s| weights[(0, s)]);
        let shaped = dsp::pulse_shape(&seq, frame.rate, bank, 0, frame.grid_len);
        for (o, v) in out
            .iter_mut()
            .zip(spectral::delay(&shaped, tau / dt, out_len))
        {
            *o += v;
        }
    }
    Ok(AnalogGrid::scalar(
        out,
        frame.oversampling,
        frame.symbol_interval,
        0.0,
    ))
}

fn grid_len(stream_len: usize, rate: usize, bank: &PulseBank) -> usize {
    let step = bank.oversampling() / rate;
    stream_len.saturating_sub(1) * step + bank.taps().len()
}

/// `x[n] = sum_l f_l s[n - kappa_l]`, pulse shaped at symbol rate.
pub fn transmit_idam(
    s: &SymbolStream,
    plan: &CompensationPlan,
    bf: &BeamformerSet,
    bank: &PulseBank,
) -> Result<TxFrame, TxError> {
    if s.is_empty() {
        return Err(TxError::EmptyPayload);
    }
    check_plan(plan, bf)?;
    if let Some(&bad) = plan.shifts.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
        return Err(TxError::NonIntegerPlan(bad));
    }
    let kmax = plan.max() as usize;
    let len = s.len() + kmax;
    let streams = plan
        .shifts
        .iter()
        .map(|&k| {
            let k = k as usize;
            let mut v = vec![Complex64::new(0.0, 0.0); len];
            v[k..k + s.len()].copy_from_slice(&s.symbols);
            v
        })
        .collect();
    let o = bank.oversampling();
    let body = (bank.span() + kmax) * o..(s.len() - 1) * o;
    Ok(TxFrame {
        scheme: Scheme::Idam,
        streams,
        rate: 1,
        mixing: bf.stacked(),
        oversampling: o,
        symbol_interval: bank.symbol_interval(),
        grid_len: grid_len(len, 1, bank),
        latency: bank.peak_time(),
        body,
        symbols: s.len(),
    })
}

/// Per path: upsample by `q`, delay by `q zeta_l` through the Farrow
/// filter, beamform; the sum is pulse shaped at rate `q`.
pub fn transmit_fdam(
    s: &SymbolStream,
    plan: &CompensationPlan,
    bf: &BeamformerSet,
    bank: &PulseBank,
    q: usize,
    farrow: &FarrowFilter,
) -> Result<TxFrame, TxError> {
    if s.is_empty() {
        return Err(TxError::EmptyPayload);
    }
    check_plan(plan, bf)?;
    let min = choose_upsampling_factor(bank.beta());
    if q < min {
        return Err(TxError::UpsamplingBound { q, min });
    }
    let o = bank.oversampling();
    if !o.is_multiple_of(q) {
        return Err(TxError::GridRate { oversampling: o, q });
    }
    let up = dsp::upsample(&DiscreteSignal::new(s.symbols.clone(), 1), q)?;
    let mut streams = plan
        .shifts
        .iter()
        .map(|&zeta| {
            farrow
                .fractional_delay(&up, q as f64 * zeta)
                .map(|d| d.samples)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let len = streams.iter().map(Vec::len).max().unwrap_or(0);
    for v in streams.iter_mut() {
        v.resize(len, Complex64::new(0.0, 0.0));
    }
    let step = o / q;
    let bulk = farrow.bulk_delay() as f64;
    let settle =
        ((q as f64 * plan.max()).ceil() as usize + farrow.order()) * step + bank.span() * o;
    Ok(TxFrame {
        scheme: Scheme::Fdam,
        streams,
        rate: q,
        mixing: bf.stacked(),
        oversampling: o,
        symbol_interval: bank.symbol_interval(),
        grid_len: grid_len(len, q, bank),
        latency: bulk * bank.symbol_interval() / q as f64 + bank.peak_time(),
        body: settle..(s.len() - 1) * o,
        symbols: s.len(),
    })
}

/// CP-OFDM with per-subcarrier beamforming, a unitary IDFT scaled so the
/// average energy per sample equals `budget`, and the shared transmit
/// pulse at symbol rate.
pub fn transmit_ofdm(
    s: &SymbolStream,
    bf: &SubcarrierBeamformerSet,
    budget: f64,
    n_sc: usize,
    n_cp: usize,
    bank: &PulseBank,
) -> Result<TxFrame, TxError> {
    if s.is_empty() {
        return Err(TxError::EmptyPayload);
    }
    if n_sc == 0 || !s.len().is_multiple_of(n_sc) {
        return Err(TxError::PayloadBlocks {
            payload: s.len(),
            n_sc,
        });
    }
    if bf.vectors.len() != n_sc {
        return Err(TxError::SubcarrierMismatch {
            vectors: bf.vectors.len(),
            n_sc,
        });
    }
    let m = bf.vectors[0].len();
    let blocks = s.len() / n_sc;
    let per_block = n_sc + n_cp;
    let amp = Complex64::from(budget.sqrt());
    let mut streams = vec![vec![Complex64::new(0.0, 0.0); blocks * per_block]; m];
    let mut freq = vec![Complex64::new(0.0, 0.0); n_sc];
    for b in 0..blocks {
        let block = &s.symbols[b * n_sc..(b + 1) * n_sc];
        for (ant, stream) in streams.iter_mut().enumerate() {
            for ((x, &sym), f) in freq.iter_mut().zip(block).zip(&bf.vectors) {
                *x = f[ant] * sym * amp;
            }
            spectral::idft_unitary(&mut freq);
            let out = &mut stream[b * per_block..(b + 1) * per_block];
            out[..n_cp].copy_from_slice(&freq[n_sc - n_cp..]);
            out[n_cp..].copy_from_slice(&freq);
        }
    }
    let o = bank.oversampling();
    let total = blocks * per_block;
    Ok(TxFrame {
        scheme: Scheme::Ofdm,
        streams,
        rate: 1,
        mixing: DMatrix::identity(m, m),
        oversampling: o,
        symbol_interval: bank.symbol_interval(),
        grid_len: grid_len(total, 1, bank),
        latency: n_cp as f64 * bank.symbol_interval() + bank.peak_time(),
        body: bank.span() * o..(total - 1) * o,
        symbols: s.len(),
    })
}

fn check_plan(plan: &CompensationPlan, bf: &BeamformerSet) -> Result<(), TxError> {
    if plan.shifts.len() != bf.vectors.len() {
        return Err(TxError::PlanMismatch {
            plan: plan.shifts.len(),
            beamformers: bf.vectors.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{ofdm_mrt_beamformers, zf_beamformers, Beamformer};
    use crate::channel::{apply_channel, generate_channel, CVector};
    use crate::dsp::design_pulse;
    use crate::modulation::{map_bits_to_symbols, random_bits, Constellation};
    use crate::rng::Seed;
    use std::f64::consts::PI;

    const T: f64 = 2.5e-9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn symbols(n: usize, seed: u64) -> SymbolStream {
        let bits = random_bits(&mut Seed(seed).rng(&[1]), 4 * n);
        map_bits_to_symbols(&bits, Constellation::Qam16).unwrap()
    }

    fn unit_paths(m: usize, delays: &[f64]) -> PathChannel {
        let gains = delays
            .iter()
            .enumerate()
            .map(|(l, _)| {
                let mut h = CVector::zeros(m);
                h[l % m] = c(1.0, 0.0);
                h
            })
            .collect();
        PathChannel::new(gains, delays.to_vec(), T).unwrap()
    }

    fn fixed_bf(vectors: Vec<CVector>) -> BeamformerSet {
        let budget = vectors.iter().map(|f| f.norm_squared()).sum();
        BeamformerSet {
            kind: Beamformer::Zf,
            vectors,
            budget,
        }
    }

    fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn idam_plan_examples() {
        let ch = unit_paths(2, &[3.6 * T, 10.2 * T]);
        assert_eq!(plan_idam(&ch).shifts, vec![6.0, 0.0]);
        let single = unit_paths(1, &[7.7 * T]);
        assert_eq!(plan_idam(&single).shifts, vec![0.0]);
        let same = unit_paths(2, &[4.2 * T, 4.2 * T]);
        assert_eq!(plan_idam(&same).shifts, vec![0.0, 0.0]);
    }

    #[test]
    fn fdam_plan_examples() {
        let ch = unit_paths(2, &[3.6 * T, 10.2 * T]);
        let p = plan_fdam(&ch);
        assert!((p.shifts[0] - 6.6).abs() < 1e-12);
        assert_eq!(p.shifts[1], 0.0);
        let ints = unit_paths(3, &[3.0 * T, 17.0 * T, 9.0 * T]);
        let f = plan_fdam(&ints);
        let i = plan_idam(&ints);
        for (a, b) in f.shifts.iter().zip(&i.shifts) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn idam_two_path_superposition() {
        let bank = design_pulse(0.25, 8, 8, T).unwrap();
        let s = symbols(40, 1);
        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let bf = fixed_bf(vec![e1.clone(), e1]);
        let plan = CompensationPlan {
            shifts: vec![1.0, 0.0],
        };
        let frame = transmit_idam(&s, &plan, &bf, &bank).unwrap();
        let x = frame.antenna_waveform(0, &bank);
        let single = CompensationPlan { shifts: vec![0.0] };
        let one = fixed_bf(vec![CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])]);
        let base = transmit_idam(&s, &single, &one, &bank)
            .unwrap()
            .antenna_waveform(0, &bank);
        // s(t - T) + s(t)
        for i in 0..base.len() {
            let delayed = if i >= 8 { base[i - 8] } else { c(0.0, 0.0) };
            assert!((x[i] - base[i] - delayed).norm() < 1e-9);
        }
        assert!(frame
            .antenna_waveform(1, &bank)
            .iter()
            .all(|v| v.norm() == 0.0));
        assert_eq!(
            transmit_idam(
                &s,
                &CompensationPlan {
                    shifts: vec![0.5, 0.0]
                },
                &bf,
                &bank
            ),
            Err(TxError::NonIntegerPlan(0.5))
        );
    }

    #[test]
    fn idam_average_power_matches_budget() {
        let bank = design_pulse(0.05, 128, 16, T).unwrap();
        let ch = generate_channel(64, 3, T, (0.0, 200.0 * T), &mut Seed(3).rng(&[0])).unwrap();
        let bf = zf_beamformers(&ch, T).unwrap();
        let s = symbols(1024 + 256, 2);
        let frame = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let grid = frame.analog(&bank);
        let body = frame.body.clone();
        let power: f64 = grid
            .samples
            .iter()
            .map(|a| a[body.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / body.len() as f64;
        let want = bf.total_power() / T;
        assert!((power / want - 1.0).abs() < 0.05, "{}", power / want);
    }

    #[test]
    fn fdam_integer_plan_matches_idam() {
        let bank = design_pulse(0.05, 128, 16, T).unwrap();
        let farrow = FarrowFilter::new(9).unwrap();
        let ch = generate_channel(8, 3, T, (0.0, 30.0 * T), &mut Seed(5).rng(&[0]))
            .unwrap()
            .with_integer_delays();
        let bf = zf_beamformers(&ch, T).unwrap();
        let s = symbols(300, 4);
        let id = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let fd = transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).unwrap();
        // the fDAM frame lags by the Farrow bulk delay
        let lag = farrow.bulk_delay() * 8;
        assert!((fd.latency - id.latency - lag as f64 * bank.spacing()).abs() < 1e-18);
        for m in [0, 5] {
            let a = id.antenna_waveform(m, &bank);
            let b = fd.antenna_waveform(m, &bank);
            assert!(max_rel(&b[lag..lag + a.len()], &a) < 1e-6);
        }
    }

    #[test]
    fn fdam_single_path_is_idam() {
        let bank = design_pulse(0.05, 32, 16, T).unwrap();
        let farrow = FarrowFilter::new(9).unwrap();
        let ch = unit_paths(2, &[13.37 * T]);
        let bf = fixed_bf(vec![CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])]);
        let s = symbols(100, 5);
        let fd = transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).unwrap();
        let id = transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap();
        let lag = farrow.bulk_delay() * 8;
        let a = id.antenna_waveform(1, &bank);
        let b = fd.antenna_waveform(1, &bank);
        assert!(max_rel(&b[lag..lag + a.len()], &a) < 1e-12);
    }

    #[test]
    fn fdam_rejects_low_upsampling() {
        let bank = design_pulse(0.9, 16, 16, T).unwrap();
        let farrow = FarrowFilter::new(3).unwrap();
        let ch = unit_paths(1, &[T]);
        let bf = fixed_bf(vec![CVector::from_element(1, c(1.0, 0.0))]);
        let s = symbols(10, 6);
        assert_eq!(
            transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow),
            Err(TxError::UpsamplingBound { q: 2, min: 3 })
        );
        let bank = design_pulse(0.05, 16, 12, T).unwrap();
        assert!(transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).is_ok());
        let bank = design_pulse(0.05, 16, 9, T).unwrap();
        assert_eq!(
            transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow),
            Err(TxError::GridRate {
                oversampling: 9,
                q: 2
            })
        );
    }

    fn out_of_band_db(x: &[Complex64], edge_cycles_per_sample: f64) -> f64 {
        let n = x.len().next_power_of_two() * 2;
        let mut buf = x.to_vec();
        buf.resize(n, c(0.0, 0.0));
        spectral::dft_unitary(&mut buf);
        let (mut inb, mut out) = (0.0, 0.0);
        for (k, v) in buf.iter().enumerate() {
            if spectral::bin_frequency(k, n).abs() > edge_cycles_per_sample {
                out += v.norm_sqr();
            } else {
                inb += v.norm_sqr();
            }
        }
        10.0 * (out / inb).log10()
    }

    #[test]
    fn all_schemes_stay_in_band() {
        let bank = design_pulse(0.05, 128, 16, T).unwrap();
        let farrow = FarrowFilter::new(9).unwrap();
        let ch = generate_channel(8, 3, T, (0.0, 200.0 * T), &mut Seed(8).rng(&[0])).unwrap();
        let bf = zf_beamformers(&ch, T).unwrap();
        let s = symbols(1024, 7);
        // (1 + beta) / 2 * 1.05 cycles per symbol, in grid units
        let edge = 1.05 * 1.05 / 2.0 / 16.0;
        let frames = [
            transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap(),
            transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).unwrap(),
            transmit_ofdm(
                &s,
                &ofdm_mrt_beamformers(&ch, 1024).unwrap(),
                T,
                1024,
                200,
                &bank,
            )
            .unwrap(),
        ];
        for frame in &frames {
            let x = frame.antenna_waveform(2, &bank);
            let oob = out_of_band_db(&x, edge);
            assert!(oob < -40.0, "{} {oob}", frame.scheme);
        }
    }

    #[test]
    fn ofdm_zero_payload_and_tone() {
        let bank = design_pulse(0.05, 16, 16, T).unwrap();
        let n = 64;
        let one = CVector::from_element(1, c(1.0, 0.0));
        let ch = PathChannel::new(vec![one], vec![0.0], T).unwrap();
        let bf = ofdm_mrt_beamformers(&ch, n).unwrap();
        let zero = SymbolStream {
            constellation: Constellation::Qam16,
            labels: vec![0; n],
            symbols: vec![c(0.0, 0.0); n],
        };
        let frame = transmit_ofdm(&zero, &bf, 1.0, n, 16, &bank).unwrap();
        assert!(frame
            .antenna_waveform(0, &bank)
            .iter()
            .all(|v| v.norm() == 0.0));

        // one active subcarrier: symbol-rate samples are a complex tone
        let k = 5;
        let mut tone = zero.clone();
        tone.symbols[k] = c(1.0, 0.0);
        let frame = transmit_ofdm(&tone, &bf, 1.0, n, 16, &bank).unwrap();
        let seq = frame.antenna_sequence(0);
        for (i, v) in seq.iter().enumerate() {
            let want = Complex64::from_polar(
                1.0 / (n as f64).sqrt(),
                2.0 * PI * k as f64 * (i as f64 - 16.0) / n as f64,
            );
            assert!((v - want).norm() < 1e-12);
        }
        // cyclic prefix copies the block tail
        assert_eq!(&seq[..16], &seq[n..n + 16]);
        assert!(transmit_ofdm(&symbols(65, 1), &bf, 1.0, n, 16, &bank).is_err());
    }

    #[test]
    fn ofdm_average_power_matches_budget() {
        let bank = design_pulse(0.05, 128, 16, T).unwrap();
        let ch = generate_channel(16, 3, T, (0.0, 200.0 * T), &mut Seed(9).rng(&[0])).unwrap();
        let bf = ofdm_mrt_beamformers(&ch, 1024).unwrap();
        let frame = transmit_ofdm(&symbols(1024, 3), &bf, T, 1024, 200, &bank).unwrap();
        let grid = frame.analog(&bank);
        let body = frame.body.clone();
        let power: f64 = grid
            .samples
            .iter()
            .map(|a| a[body.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / body.len() as f64;
        // budget T per symbol interval: unit power
        assert!((power - 1.0).abs() < 0.05, "{power}");
    }

    #[test]
    fn propagate_matches_apply_channel() {
        let bank = design_pulse(0.05, 16, 16, T).unwrap();
        let farrow = FarrowFilter::new(5).unwrap();
        let ch = generate_channel(6, 3, T, (0.0, 20.0 * T), &mut Seed(10).rng(&[0])).unwrap();
        let bf = zf_beamformers(&ch, T).unwrap();
        let s = symbols(128, 8);
        let frames = [
            transmit_idam(&s, &plan_idam(&ch), &bf, &bank).unwrap(),
            transmit_fdam(&s, &plan_fdam(&ch), &bf, &bank, 2, &farrow).unwrap(),
            transmit_ofdm(
                &s,
                &ofdm_mrt_beamformers(&ch, 64).unwrap(),
                T,
                64,
                16,
                &bank,
            )
            .unwrap(),
        ];
        for frame in &frames {
            let fast = propagate(frame, &ch, &bank).unwrap();
            let slow = apply_channel(&frame.analog(&bank), &ch).unwrap();
            assert_eq!(fast.len(), slow.len());
            assert!(
                max_rel(&fast.samples[0], &slow.samples[0]) < 1e-10,
                "{}",
                frame.scheme
            );
        }
    }
}
