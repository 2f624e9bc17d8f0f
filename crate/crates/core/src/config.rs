//! Campaign configuration: flat `key = value` text, validated as a whole.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::beamforming::Beamformer;
use crate::dsp::choose_upsampling_factor;
use crate::modulation::Constellation;
use crate::tx::Scheme;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid configuration:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub antennas: usize,
    pub paths: usize,
    /// Seconds.
    pub symbol_interval: f64,
    /// Hz; recorded only.
    pub carrier_frequency: f64,
    pub roll_off: f64,
    /// Pulse span in symbols.
    pub pulse_span: usize,
    /// Analog grid samples per symbol.
    pub oversampling: usize,
    pub upsampling: usize,
    pub farrow_order: usize,
    /// Path delay range in symbol intervals.
    pub delay_range: (f64, f64),
    pub constellation: Constellation,
    pub subcarriers: usize,
    pub cyclic_prefix: usize,
    /// Counted symbols per realization.
    pub symbols_per_frame: usize,
    pub trials: usize,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub beamformers: Vec<Beamformer>,
    pub seed: u64,
    pub output: PathBuf,
    /// Round every drawn delay to a whole number of symbols.
    pub integer_delays: bool,
    /// Skip noise injection.
    pub noiseless: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            antennas: 64,
            paths: 3,
            symbol_interval: 2.5e-9,
            carrier_frequency: 28e9,
            roll_off: 0.05,
            pulse_span: 128,
            oversampling: 16,
            upsampling: 2,
            farrow_order: 9,
            delay_range: (0.0, 200.0),
            constellation: Constellation::Qam16,
            subcarriers: 1024,
            cyclic_prefix: 200,
            symbols_per_frame: 1024,
            trials: 500,
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            schemes: Scheme::ALL.to_vec(),
            beamformers: vec![Beamformer::Zf],
            seed: 1,
            output: PathBuf::from("results.csv"),
            integer_delays: false,
            noiseless: false,
        }
    }
}

pub const KEYS: [&str; 22] = [
    "antennas",
    "paths",
    "symbol_interval",
    "carrier_frequency",
    "roll_off",
    "pulse_span",
    "oversampling",
    "upsampling",
    "farrow_order",
    "delay_range",
    "constellation",
    "subcarriers",
    "cyclic_prefix",
    "symbols_per_frame",
    "trials",
    "snr_db",
    "schemes",
    "beamformers",
    "seed",
    "output",
    "integer_delays",
    "noiseless",
];

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(format!("range `{s}` needs start:stop:step"));
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(format!("range `{s}` is empty or unbounded"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    parse_list(s)
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<f64> = parse_list(s)?;
    match v[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(format!("`{s}` needs two values `lo, hi`")),
    }
}

fn parse_one<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("`{s}`: {e}"))
}

impl CampaignConfig {
    /// Parse `key = value` lines over the defaults. `#` starts a comment.
    /// Every problem is collected; nothing is partially accepted.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected `key = value`", n + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                errors.push(format!("line {}: duplicate key `{key}`", n + 1));
                continue;
            }
            seen.push(key.to_string());
            if let Err(e) = cfg.set(key, value) {
                errors.push(format!("line {}: {key}: {e}", n + 1));
            }
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError(errors))
        }
    }

    /// Assign one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "antennas" => self.antennas = parse_one(value)?,
            "paths" => self.paths = parse_one(value)?,
            "symbol_interval" => self.symbol_interval = parse_one(value)?,
            "carrier_frequency" => self.carrier_frequency = parse_one(value)?,
            "roll_off" => self.roll_off = parse_one(value)?,
            "pulse_span" => self.pulse_span = parse_one(value)?,
            "oversampling" => self.oversampling = parse_one(value)?,
            "upsampling" => self.upsampling = parse_one(value)?,
            "farrow_order" => self.farrow_order = parse_one(value)?,
            "delay_range" => self.delay_range = parse_range(value)?,
            "constellation" => self.constellation = parse_one(value)?,
            "subcarriers" => self.subcarriers = parse_one(value)?,
            "cyclic_prefix" => self.cyclic_prefix = parse_one(value)?,
            "symbols_per_frame" => self.symbols_per_frame = parse_one(value)?,
            "trials" => self.trials = parse_one(value)?,
            "snr_db" => self.snr_db = parse_snr_grid(value)?,
            "schemes" => self.schemes = parse_list(value)?,
            "beamformers" => self.beamformers = parse_list(value)?,
            "seed" => self.seed = parse_one(value)?,
            "output" => self.output = PathBuf::from(value),
            "integer_delays" => self.integer_delays = parse_bool(value)?,
            "noiseless" => self.noiseless = parse_bool(value)?,
            other => {
                return Err(format!(
                    "unknown key `{other}`; known keys: {}",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Text form accepted by [`CampaignConfig::parse`].
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("antennas", self.antennas.to_string());
        kv("paths", self.paths.to_string());
        kv("symbol_interval", format!("{:e}", self.symbol_interval));
        kv("carrier_frequency", format!("{:e}", self.carrier_frequency));
        kv("roll_off", self.roll_off.to_string());
        kv("pulse_span", self.pulse_span.to_string());
        kv("oversampling", self.oversampling.to_string());
        kv("upsampling", self.upsampling.to_string());
        kv("farrow_order", self.farrow_order.to_string());
        kv(
            "delay_range",
            format!("{}, {}", self.delay_range.0, self.delay_range.1),
        );
        kv("constellation", self.constellation.to_string());
        kv("subcarriers", self.subcarriers.to_string());
        kv("cyclic_prefix", self.cyclic_prefix.to_string());
        kv("symbols_per_frame", self.symbols_per_frame.to_string());
        kv("trials", self.trials.to_string());
        kv(
            "snr_db",
            join(self.snr_db.iter().map(f64::to_string).collect()),
        );
        kv(
            "schemes",
            join(self.schemes.iter().map(ToString::to_string).collect()),
        );
        kv(
            "beamformers",
            join(self.beamformers.iter().map(ToString::to_string).collect()),
        );
        kv("seed", self.seed.to_string());
        kv("output", self.output.display().to_string());
        kv("integer_delays", self.integer_delays.to_string());
        kv("noiseless", self.noiseless.to_string());
        s
    }
}

/// Check every invariant and report all violations at once.
pub fn validate_config(cfg: &CampaignConfig) -> Result<(), ConfigError> {
    let mut v = Vec::new();
    if cfg.paths == 0 {
        v.push("paths must be at least 1".to_string());
    }
    if cfg.antennas < cfg.paths {
        v.push(format!(
            "antennas = {} cannot zero-force paths = {}",
            cfg.antennas, cfg.paths
        ));
    }
    if !(cfg.symbol_interval > 0.0 && cfg.symbol_interval.is_finite()) {
        v.push(format!(
            "symbol_interval = {} must be positive",
            cfg.symbol_interval
        ));
    }
    if !(cfg.carrier_frequency >= 0.0 && cfg.carrier_frequency.is_finite()) {
        v.push(format!(
            "carrier_frequency = {} must be non-negative",
            cfg.carrier_frequency
        ));
    }
    let beta_ok = (0.0..=1.0).contains(&cfg.roll_off);
    if !beta_ok {
        v.push(format!("roll_off = {} outside [0, 1]", cfg.roll_off));
    }
    if cfg.pulse_span == 0 || !cfg.pulse_span.is_multiple_of(2) {
        v.push(format!(
            "pulse_span = {} must be a positive even number",
            cfg.pulse_span
        ));
    }
    if beta_ok {
        let min_q = choose_upsampling_factor(cfg.roll_off);
        if cfg.upsampling < min_q {
            v.push(format!(
                "upsampling = {} violates Q >= ceil(1.25 (1 + roll_off)) = {min_q}",
                cfg.upsampling
            ));
        }
    }
    if cfg.upsampling == 0 || !cfg.oversampling.is_multiple_of(cfg.upsampling.max(1)) {
        v.push(format!(
            "oversampling = {} is not a multiple of upsampling = {}",
            cfg.oversampling, cfg.upsampling
        ));
    }
    if cfg.oversampling < 4 || cfg.oversampling < 2 * cfg.upsampling {
        v.push(format!(
            "oversampling = {} must be at least max(4, 2 upsampling)",
            cfg.oversampling
        ));
    }
    if cfg.farrow_order == 0 {
        v.push("farrow_order must be at least 1".to_string());
    }
    let (lo, hi) = cfg.delay_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        v.push(format!(
            "delay_range = [{lo}, {hi}] must satisfy 0 <= lo < hi"
        ));
    }
    if cfg.subcarriers == 0 {
        v.push("subcarriers must be positive".to_string());
    }
    if cfg.cyclic_prefix > cfg.subcarriers {
        v.push(format!(
            "cyclic_prefix = {} exceeds subcarriers = {}",
            cfg.cyclic_prefix, cfg.subcarriers
        ));
    }
    if cfg.symbols_per_frame == 0 {
        v.push("symbols_per_frame must be positive".to_string());
    }
    if cfg.schemes.contains(&Scheme::Ofdm)
        && cfg.subcarriers > 0
        && !cfg.symbols_per_frame.is_multiple_of(cfg.subcarriers)
    {
        v.push(format!(
            "symbols_per_frame = {} is not a multiple of subcarriers = {}",
            cfg.symbols_per_frame, cfg.subcarriers
        ));
    }
    if cfg.trials == 0 {
        v.push("trials must be at least 1".to_string());
    }
    if cfg.snr_db.is_empty() {
        v.push("snr_db grid is empty".to_string());
    }
    if let Some(x) = cfg.snr_db.iter().find(|x| !x.is_finite()) {
        v.push(format!("snr_db contains non-finite value {x}"));
    }
    if cfg.schemes.is_empty() {
        v.push("schemes list is empty".to_string());
    }
    if cfg.beamformers.is_empty() {
        v.push("beamformers list is empty".to_string());
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(ConfigError(v))
    }
}

/// Same campaign with channel delays rounded to whole symbols.
pub fn integer_delay_mode(cfg: &CampaignConfig) -> CampaignConfig {
    CampaignConfig {
        integer_delays: true,
        ..cfg.clone()
    }
}
