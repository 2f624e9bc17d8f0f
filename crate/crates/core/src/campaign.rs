//! Monte-Carlo campaign: one channel and one payload per trial, shared by
//! every scheme, beamformer and SNR point.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::beamforming::{
    design_beamformers, ofdm_mrt_beamformers, zf_beamformers, Beamformer, BeamformingError,
};
use crate::channel::{add_awgn, generate_channel, AnalogGrid, ChannelError, PathChannel};
use crate::config::{validate_config, CampaignConfig, ConfigError};
use crate::dsp::{design_pulse, DspError, FarrowFilter, PulseBank};
use crate::metrics::{
    db, frame_papr, from_db, quantile, ser, sinr_fdam_analytic, sinr_idam_analytic,
    spectral_efficiency, MetricsError, OverheadModel, SerEstimate, SinrBreakdown,
};
use crate::modulation::{map_bits_to_symbols, random_bits, ModulationError, SymbolStream};
use crate::rng::Seed;
use crate::rx::{
    coherent_gain_estimate, detect_scaled, measure_sinr_empirical, ofdm_equivalent_gains,
    receive_dam, receive_ofdm, RxError, SamplingSchedule,
};
use crate::tx::{
    plan_fdam, plan_idam, propagate, transmit_fdam, transmit_idam, transmit_ofdm, Scheme, TxError,
    TxFrame,
};

/// Transmit power; the per-symbol energy budget is `POWER * T`.
pub const POWER: f64 = 1.0;

const CHANNEL_STREAM: u64 = 0;
const PAYLOAD_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        source: Box<CampaignError>,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Rx(#[from] RxError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub beamformer: Beamformer,
    pub snr_index: usize,
    pub snr_db: f64,
    pub trial: usize,
    pub errors: u64,
    pub symbols: u64,
    pub sinr: SinrBreakdown,
    pub sinr_ana_db: f64,
    pub se_bps_hz: f64,
    pub papr_p50_db: f64,
    pub papr_p99_db: f64,
    pub seed: u64,
}

impl TrialRecord {
    pub fn ser(&self) -> f64 {
        self.errors as f64 / self.symbols as f64
    }

    pub fn sinr_emp_db(&self) -> f64 {
        self.sinr.gamma_db()
    }
}

/// Per-antenna PAPR of one transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PaprRecord {
    pub scheme: Scheme,
    pub beamformer: Beamformer,
    pub trial: usize,
    pub antenna: usize,
    pub papr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResults {
    pub config: CampaignConfig,
    pub records: Vec<TrialRecord>,
    pub papr: Vec<PaprRecord>,
}

impl CampaignResults {
    fn select(
        &self,
        scheme: Scheme,
        bf: Beamformer,
        snr_index: usize,
    ) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.scheme == scheme && r.beamformer == bf && r.snr_index == snr_index)
    }

    /// SER pooled over trials.
    pub fn pooled_ser(&self, scheme: Scheme, bf: Beamformer, snr_index: usize) -> SerEstimate {
        ser(self
            .select(scheme, bf, snr_index)
            .map(|r| (r.errors, r.symbols)))
    }

    pub fn mean_se(&self, scheme: Scheme, bf: Beamformer, snr_index: usize) -> f64 {
        mean(self.select(scheme, bf, snr_index).map(|r| r.se_bps_hz))
    }

    /// Per-trial empirical SINR (dB) at one grid point.
    pub fn sinr_emp_db(&self, scheme: Scheme, bf: Beamformer, snr_index: usize) -> Vec<f64> {
        self.select(scheme, bf, snr_index)
            .map(TrialRecord::sinr_emp_db)
            .collect()
    }

    /// Every per-antenna PAPR sample of a scheme.
    pub fn papr_samples(&self, scheme: Scheme, bf: Beamformer) -> Vec<f64> {
        self.papr
            .iter()
            .filter(|p| p.scheme == scheme && p.beamformer == bf)
            .map(|p| p.papr_db)
            .collect()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Beamformer used for a scheme's rows: OFDM always uses per-subcarrier MRT.
pub fn row_beamformers(cfg: &CampaignConfig, scheme: Scheme) -> Vec<Beamformer> {
    if scheme == Scheme::Ofdm {
        vec![Beamformer::Mrt]
    } else {
        cfg.beamformers.clone()
    }
}

/// Validated configuration with the shared pulse and Farrow filter.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: CampaignConfig,
    pub bank: PulseBank,
    pub farrow: FarrowFilter,
}

struct TrialFrames {
    ch: PathChannel,
    payload: SymbolStream,
    counted: SymbolStream,
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self, CampaignError> {
        validate_config(&config)?;
        let bank = design_pulse(
            config.roll_off,
            config.pulse_span,
            config.oversampling,
            config.symbol_interval,
        )?;
        let farrow = FarrowFilter::new(config.farrow_order)?;
        Ok(Self {
            config,
            bank,
            farrow,
        })
    }

    fn seed(&self) -> Seed {
        Seed(self.config.seed)
    }

    pub fn budget(&self) -> f64 {
        POWER * self.config.symbol_interval
    }

    /// Channel realization of `trial`.
    pub fn channel(&self, trial: usize) -> Result<PathChannel, CampaignError> {
        let c = &self.config;
        let t = c.symbol_interval;
        let range = (c.delay_range.0 * t, c.delay_range.1 * t);
        let mut rng = self.seed().rng(&[trial as u64, CHANNEL_STREAM]);
        let ch = generate_channel(c.antennas, c.paths, t, range, &mut rng)?;
        Ok(if c.integer_delays {
            ch.with_integer_delays()
        } else {
            ch
        })
    }

    /// DAM payload: counted symbols with `pulse_span` guard symbols each side.
    pub fn payload(&self, trial: usize) -> Result<SymbolStream, CampaignError> {
        let c = &self.config;
        let n = c.symbols_per_frame + 2 * c.pulse_span;
        let mut rng = self.seed().rng(&[trial as u64, PAYLOAD_STREAM]);
        let bits = random_bits(&mut rng, n * c.constellation.bits_per_symbol());
        Ok(map_bits_to_symbols(&bits, c.constellation)?)
    }

    fn counted(&self) -> std::ops::Range<usize> {
        self.config.pulse_span..self.config.pulse_span + self.config.symbols_per_frame
    }

    /// Noise PSD for DAM at `snr_db`: zero-forcing coherent gain over SNR.
    pub fn dam_noise(&self, ch: &PathChannel, snr_db: f64) -> Result<f64, CampaignError> {
        if self.config.noiseless {
            return Ok(0.0);
        }
        let reference = zf_beamformers(ch, self.budget())?;
        Ok(reference.coherent_gain(ch).norm_sqr() / from_db(snr_db))
    }

    /// Noise PSD for OFDM at `snr_db`: budget times mean `||g_k||^2` over SNR.
    pub fn ofdm_noise(&self, gains: &[f64], snr_db: f64) -> f64 {
        if self.config.noiseless {
            return 0.0;
        }
        let mean_gain = gains.iter().map(|g| g * g).sum::<f64>() / gains.len() as f64;
        self.budget() * mean_gain / from_db(snr_db)
    }

    fn frames(&self, trial: usize) -> Result<TrialFrames, CampaignError> {
        let payload = self.payload(trial)?;
        Ok(TrialFrames {
            ch: self.channel(trial)?,
            counted: payload.slice(self.counted()),
            payload,
        })
    }

    fn dam_frame(
        &self,
        scheme: Scheme,
        ch: &PathChannel,
        bf: &crate::beamforming::BeamformerSet,
        payload: &SymbolStream,
    ) -> Result<TxFrame, CampaignError> {
        Ok(match scheme {
            Scheme::Idam => transmit_idam(payload, &plan_idam(ch), bf, &self.bank)?,
            _ => transmit_fdam(
                payload,
                &plan_fdam(ch),
                bf,
                &self.bank,
                self.config.upsampling,
                &self.farrow,
            )?,
        })
    }

    fn noise_rng(
        &self,
        trial: usize,
        scheme: Scheme,
        bf: Beamformer,
        snr_index: usize,
    ) -> crate::rng::SimRng {
        let s = Scheme::ALL.iter().position(|&x| x == scheme).unwrap_or(0) as u64;
        let b = Beamformer::ALL.iter().position(|&x| x == bf).unwrap_or(0) as u64;
        self.seed()
            .rng(&[trial as u64, NOISE_STREAM, s, b, snr_index as u64])
    }

    /// Every result row of one trial, plus per-antenna PAPR at the first SNR.
    pub fn run_trial(
        &self,
        trial: usize,
    ) -> Result<(Vec<TrialRecord>, Vec<PaprRecord>), CampaignError> {
        let tf = self.frames(trial)?;
        let mut rows = Vec::new();
        let mut papr = Vec::new();
        for &scheme in &self.config.schemes {
            for bf in row_beamformers(&self.config, scheme) {
                let (r, p) = if scheme == Scheme::Ofdm {
                    self.run_ofdm(trial, &tf)?
                } else {
                    self.run_dam(trial, scheme, bf, &tf)?
                };
                rows.extend(r);
                papr.extend(p);
            }
        }
        Ok((rows, papr))
    }

    fn run_dam(
        &self,
        trial: usize,
        scheme: Scheme,
        kind: Beamformer,
        tf: &TrialFrames,
    ) -> Result<(Vec<TrialRecord>, Vec<PaprRecord>), CampaignError> {
        let ch = &tf.ch;
        let counted = self.counted();
        let overhead = OverheadModel::dam(scheme, self.config.roll_off);
        let mut rows = Vec::new();
        let mut papr_rows = Vec::new();
        // (beamformer, frame, noiseless samples, LS gain, per-antenna PAPR)
        let mut cached: Option<(
            crate::beamforming::BeamformerSet,
            TxFrame,
            AnalogGrid,
            Vec<f64>,
        )> = None;
        for (si, &snr) in self.config.snr_db.iter().enumerate() {
            let noise = self.dam_noise(ch, snr)?;
            let rebuild = cached.is_none() || kind == Beamformer::Mmse;
            if rebuild {
                let bf = design_beamformers(kind, ch, self.budget(), noise)?;
                let frame = self.dam_frame(scheme, ch, &bf, &tf.payload)?;
                let y0 = propagate(&frame, ch, &self.bank)?;
                let papr = frame_papr(&frame, &self.bank)?;
                cached = Some((bf, frame, y0, papr));
            }
            let (bf, frame, y0, papr) = cached.as_ref().expect("built above");
            if si == 0 {
                papr_rows.extend(
                    papr.iter()
                        .enumerate()
                        .map(|(antenna, &papr_db)| PaprRecord {
                            scheme,
                            beamformer: kind,
                            trial,
                            antenna,
                            papr_db,
                        }),
                );
            }
            let sched = SamplingSchedule::for_frame(frame, ch, 0);
            let r0 = receive_dam(y0, &self.bank, &sched)?.samples[counted.clone()].to_vec();
            let y = add_awgn(y0, noise, &mut self.noise_rng(trial, scheme, kind, si))?;
            let r = receive_dam(&y, &self.bank, &sched)?.samples[counted.clone()].to_vec();
            let gain = coherent_gain_estimate(&r0, &tf.counted.symbols)?;
            let det = detect_scaled(&r, &[gain], &tf.counted)?;
            let sinr = measure_sinr_empirical(&r0, &r, &tf.counted.symbols)?;
            let ana = match scheme {
                Scheme::Idam => sinr_idam_analytic(ch, bf, &self.bank, noise),
                _ => sinr_fdam_analytic(ch, bf, &self.bank, noise),
            };
            // symbol energy of the payload enters both measured and analytic desired power
            let es = energy(&tf.counted.symbols);
            let ana = SinrBreakdown::new(ana.desired * es, ana.interference * es, ana.noise);
            rows.push(TrialRecord {
                scheme,
                beamformer: kind,
                snr_index: si,
                snr_db: snr,
                trial,
                errors: det.errors as u64,
                symbols: counted.len() as u64,
                sinr,
                sinr_ana_db: ana.gamma_db(),
                se_bps_hz: spectral_efficiency(&[sinr.gamma], overhead)?,
                papr_p50_db: quantile(papr, 0.5)?,
                papr_p99_db: quantile(papr, 0.99)?,
                seed: self.seed().trial(trial as u64),
            });
        }
        Ok((rows, papr_rows))
    }

    fn run_ofdm(
        &self,
        trial: usize,
        tf: &TrialFrames,
    ) -> Result<(Vec<TrialRecord>, Vec<PaprRecord>), CampaignError> {
        let c = &self.config;
        let ch = &tf.ch;
        let (n_sc, n_cp) = (c.subcarriers, c.cyclic_prefix);
        let bf = ofdm_mrt_beamformers(ch, n_sc)?;
        let frame = transmit_ofdm(&tf.counted, &bf, self.budget(), n_sc, n_cp, &self.bank)?;
        let y0 = propagate(&frame, ch, &self.bank)?;
        let papr = frame_papr(&frame, &self.bank)?;
        let (p50, p99) = (quantile(&papr, 0.5)?, quantile(&papr, 0.99)?);
        let sched = SamplingSchedule::for_frame(&frame, ch, n_cp);
        let gains = ofdm_equivalent_gains(ch, &bf, &self.bank, self.budget());
        let s = &tf.counted.symbols;
        let z0 = receive_ofdm(&y0, &self.bank, &sched, n_sc, n_cp)?;
        let es = energy(s);
        let n = s.len() as f64;
        let interference = z0
            .iter()
            .zip(s)
            .enumerate()
            .map(|(i, (z, x))| (z - gains[i % n_sc] * x).norm_sqr())
            .sum::<f64>()
            / n;
        let desired_k: Vec<f64> = gains.iter().map(|g| g.norm_sqr() * es).collect();
        let desired = desired_k.iter().sum::<f64>() / n_sc as f64;
        let overhead = OverheadModel::ofdm(n_sc, n_cp);
        let mut rows = Vec::new();
        for (si, &snr) in c.snr_db.iter().enumerate() {
            let noise_psd = self.ofdm_noise(&bf.gains, snr);
            let y = add_awgn(
                &y0,
                noise_psd,
                &mut self.noise_rng(trial, Scheme::Ofdm, Beamformer::Mrt, si),
            )?;
            let z = receive_ofdm(&y, &self.bank, &sched, n_sc, n_cp)?;
            let det = detect_scaled(&z, &gains, &tf.counted)?;
            let noise = z
                .iter()
                .zip(&z0)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / n;
            let gammas: Vec<f64> = desired_k
                .iter()
                .map(|d| d / (interference + noise))
                .collect();
            let ana = mean(desired_k.iter().map(|d| d / noise_psd));
            rows.push(TrialRecord {
                scheme: Scheme::Ofdm,
                beamformer: Beamformer::Mrt,
                snr_index: si,
                snr_db: snr,
                trial,
                errors: det.errors as u64,
                symbols: s.len() as u64,
                sinr: SinrBreakdown::new(desired, interference, noise),
                sinr_ana_db: db(ana),
                se_bps_hz: spectral_efficiency(&gammas, overhead)?,
                papr_p50_db: p50,
                papr_p99_db: p99,
                seed: self.seed().trial(trial as u64),
            });
        }
        let papr_rows = papr
            .into_iter()
            .enumerate()
            .map(|(antenna, papr_db)| PaprRecord {
                scheme: Scheme::Ofdm,
                beamformer: Beamformer::Mrt,
                trial,
                antenna,
                papr_db,
            })
            .collect();
        Ok((rows, papr_rows))
    }

    /// Per-antenna PAPR only, skipping reception.
    pub fn papr_trial(&self, trial: usize) -> Result<Vec<PaprRecord>, CampaignError> {
        let tf = self.frames(trial)?;
        let ch = &tf.ch;
        let mut out = Vec::new();
        for &scheme in &self.config.schemes {
            for kind in row_beamformers(&self.config, scheme) {
                let frame = if scheme == Scheme::Ofdm {
                    let bf = ofdm_mrt_beamformers(ch, self.config.subcarriers)?;
                    transmit_ofdm(
                        &tf.counted,
                        &bf,
                        self.budget(),
                        self.config.subcarriers,
                        self.config.cyclic_prefix,
                        &self.bank,
                    )?
                } else {
                    let noise = self.dam_noise(ch, self.config.snr_db[0])?;
                    let bf = design_beamformers(kind, ch, self.budget(), noise)?;
                    self.dam_frame(scheme, ch, &bf, &tf.payload)?
                };
                out.extend(frame_papr(&frame, &self.bank)?.into_iter().enumerate().map(
                    |(antenna, papr_db)| PaprRecord {
                        scheme,
                        beamformer: kind,
                        trial,
                        antenna,
                        papr_db,
                    },
                ));
            }
        }
        Ok(out)
    }
}

fn energy(s: &[Complex64]) -> f64 {
    s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64
}

fn wrap(trial: usize) -> impl Fn(CampaignError) -> CampaignError {
    move |e| CampaignError::Trial {
        trial,
        source: Box::new(e),
    }
}

/// Run every trial (in parallel) and sort rows by scheme, beamformer, SNR, trial.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResults, CampaignError> {
    let campaign = Campaign::new(config.clone())?;
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|t| campaign.run_trial(t).map_err(wrap(t)))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut records, mut papr): (Vec<_>, Vec<_>) = (Vec::new(), Vec::new());
    for (r, p) in per_trial {
        records.extend(r);
        papr.extend(p);
    }
    records.sort_by_key(|r| (r.scheme, r.beamformer, r.snr_index, r.trial));
    papr.sort_by_key(|p| (p.scheme, p.beamformer, p.trial, p.antenna));
    Ok(CampaignResults {
        config: config.clone(),
        records,
        papr,
    })
}

/// Per-antenna PAPR of every trial without reception.
pub fn run_papr(config: &CampaignConfig) -> Result<Vec<PaprRecord>, CampaignError> {
    let campaign = Campaign::new(config.clone())?;
    let mut out = (0..config.trials)
        .into_par_iter()
        .map(|t| campaign.papr_trial(t).map_err(wrap(t)))
        .collect::<Result<Vec<_>, _>>()?
        .concat();
    out.sort_by_key(|p| (p.scheme, p.beamformer, p.trial, p.antenna));
    Ok(out)
}
