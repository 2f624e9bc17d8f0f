//! Sparse multipath MISO channel with continuous path delays, the analog
//! grid it acts on, and receiver noise.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::dsp::spectral;
use crate::rng::complex_normal;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Largest tolerated condition number of `H^H H` before the path angles
/// are redrawn.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{antennas} antennas cannot zero-force {paths} paths")]
    TooFewAntennas { antennas: usize, paths: usize },
    #[error("at least one path is required")]
    NoPaths,
    #[error("degenerate delay range [{0}, {1}]")]
    DelayRange(f64, f64),
    #[error("negative delay {0}")]
    NegativeDelay(f64),
    #[error("symbol interval {0} must be positive")]
    SymbolInterval(f64),
    #[error("no full-rank realization after {0} redraws")]
    RankDeficient(usize),
    #[error("transmit grid is empty")]
    GridTooShort,
    #[error("transmit grid has {grid} antennas, channel has {channel}")]
    AntennaMismatch { grid: usize, channel: usize },
    #[error("grid symbol interval {grid} differs from channel {channel}")]
    RateMismatch { grid: f64, channel: f64 },
    #[error("antenna streams have unequal lengths")]
    RaggedGrid,
    #[error("negative noise density {0}")]
    NegativeNoise(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("channel record line {line}: {message}")]
    Record { line: usize, message: String },
}

/// Densely oversampled complex baseband emulating continuous time.
///
/// `samples[a][i]` is antenna `a` at time `start + i * T / oversampling`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogGrid {
    pub samples: Vec<Vec<Complex64>>,
    pub oversampling: usize,
    pub symbol_interval: f64,
    pub start: f64,
}

impl AnalogGrid {
    pub fn scalar(
        samples: Vec<Complex64>,
        oversampling: usize,
        symbol_interval: f64,
        start: f64,
    ) -> Self {
        Self {
            samples: vec![samples],
            oversampling,
            symbol_interval,
            start,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.symbol_interval / self.oversampling as f64
    }

    pub fn antennas(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fractional grid index of time `t`.
    pub fn position(&self, t: f64) -> f64 {
        (t - self.start) / self.spacing()
    }
}

/// Path delay split as `tau = n T + frac`, `frac` in `[-T/2, T/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDecomposition {
    pub integer: i64,
    pub fraction: f64,
}

pub fn decompose_delay(tau: f64, symbol_interval: f64) -> Result<DelayDecomposition, ChannelError> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(ChannelError::NegativeDelay(tau));
    }
    if !(symbol_interval > 0.0) {
        return Err(ChannelError::SymbolInterval(symbol_interval));
    }
    // ties k + 1/2 go up, keeping the fraction inside [-T/2, T/2)
    let integer = (tau / symbol_interval + 0.5).floor() as i64;
    let fraction = tau - integer as f64 * symbol_interval;
    Ok(DelayDecomposition { integer, fraction })
}

/// Physical channel `h^H(t) = sum_l h_l^H delta(t - tau_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathChannel {
    pub gains: Vec<CVector>,
    pub delays: Vec<f64>,
    pub symbol_interval: f64,
}

/// Half-wavelength uniform linear array response, `|a|^2 = M`.
pub fn steering_vector(antennas: usize, angle: f64) -> CVector {
    CVector::from_fn(antennas, |m, _| {
        Complex64::from_polar(1.0, PI * m as f64 * angle.sin())
    })
}

impl PathChannel {
    pub fn new(
        gains: Vec<CVector>,
        delays: Vec<f64>,
        symbol_interval: f64,
    ) -> Result<Self, ChannelError> {
        if gains.is_empty() {
            return Err(ChannelError::NoPaths);
        }
        if gains.len() != delays.len() {
            return Err(ChannelError::Record {
                line: 0,
                message: format!("{} gains but {} delays", gains.len(), delays.len()),
            });
        }
        let m = gains[0].len();
        if gains.iter().any(|g| g.len() != m) {
            return Err(ChannelError::RaggedGrid);
        }
        if gains
            .iter()
            .flat_map(|g| g.iter())
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(ChannelError::NonFinite("path gains"));
        }
        if let Some(&d) = delays.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(ChannelError::NegativeDelay(d));
        }
        if !(symbol_interval > 0.0) {
            return Err(ChannelError::SymbolInterval(symbol_interval));
        }
        Ok(Self {
            gains,
            delays,
            symbol_interval,
        })
    }

    pub fn antennas(&self) -> usize {
        self.gains[0].len()
    }

    pub fn paths(&self) -> usize {
        self.gains.len()
    }

    pub fn max_delay(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }

    /// Stacked `M x L` matrix `[h_1 ... h_L]`.
    pub fn stacked(&self) -> CMatrix {
        CMatrix::from_columns(&self.gains)
    }

    pub fn decompositions(&self) -> Vec<DelayDecomposition> {
        self.delays
            .iter()
            .map(|&d| decompose_delay(d, self.symbol_interval).expect("validated delays"))
            .collect()
    }

    /// Condition number of the Gram matrix `H^H H`.
    pub fn gram_condition(&self) -> f64 {
        let sv = self.stacked().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            (max / min).powi(2)
        }
    }

    /// Same channel with every delay rounded to the nearest symbol multiple.
    pub fn with_integer_delays(&self) -> Self {
        let delays = self
            .decompositions()
            .iter()
            .map(|d| d.integer as f64 * self.symbol_interval)
            .collect();
        Self {
            delays,
            ..self.clone()
        }
    }

    /// Channel vector `g(f)` at baseband frequency `f` (Hz), defined so the
    /// received tone is `g(f)^H x`: `g(f) = sum_l h_l exp(+j 2 pi f tau_l)`.
    pub fn frequency_response(&self, f: f64) -> CVector {
        let mut acc = CVector::zeros(self.antennas());
        for (h, &tau) in self.gains.iter().zip(&self.delays) {
            acc += h * Complex64::from_polar(1.0, 2.0 * PI * f * tau);
        }
        acc
    }

    /// Self-describing text record; decimal fields round-trip exactly.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        writeln!(s, "pathchannel v1").unwrap();
        writeln!(s, "antennas {}", self.antennas()).unwrap();
        writeln!(s, "paths {}", self.paths()).unwrap();
        writeln!(s, "symbol_interval {:e}", self.symbol_interval).unwrap();
        for (l, (h, d)) in self.gains.iter().zip(&self.delays).enumerate() {
            writeln!(s, "delay {l} {d:e}").unwrap();
            write!(s, "gain {l}").unwrap();
            for v in h.iter() {
                write!(s, " {:e} {:e}", v.re, v.im).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self, ChannelError> {
        let err = |line: usize, message: &str| ChannelError::Record {
            line,
            message: message.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, "pathchannel v1")) => {}
            Some((n, _)) => return Err(err(n, "expected header `pathchannel v1`")),
            None => return Err(err(0, "empty record")),
        }
        let mut antennas = None;
        let mut paths = None;
        let mut interval = None;
        let mut delays: Vec<Option<f64>> = Vec::new();
        let mut gains: Vec<Option<CVector>> = Vec::new();
        let num = |n: usize, tok: Option<&str>| -> Result<f64, ChannelError> {
            tok.ok_or_else(|| err(n, "missing value"))?
                .parse::<f64>()
                .map_err(|e| err(n, &e.to_string()))
        };
        for (n, line) in lines {
            let mut tok = line.split_whitespace();
            let key = tok.next().unwrap_or_default();
            match key {
                "antennas" | "paths" => {
                    let v = tok
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| err(n, "expected a count"))?;
                    if key == "antennas" {
                        antennas = Some(v);
                    } else {
                        paths = Some(v);
                        delays = vec![None; v];
                        gains = vec![None; v];
                    }
                }
                "symbol_interval" => interval = Some(num(n, tok.next())?),
                "delay" | "gain" => {
                    let l = tok
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .filter(|&l| l < delays.len())
                        .ok_or_else(|| err(n, "path index missing or out of range"))?;
                    if key == "delay" {
                        delays[l] = Some(num(n, tok.next())?);
                    } else {
                        let m = antennas.ok_or_else(|| err(n, "gain before antennas"))?;
                        let vals = tok
                            .map(|t| t.parse::<f64>().map_err(|e| err(n, &e.to_string())))
                            .collect::<Result<Vec<_>, _>>()?;
                        if vals.len() != 2 * m {
                            return Err(err(n, "gain needs 2 * antennas values"));
                        }
                        gains[l] = Some(CVector::from_fn(m, |i, _| {
                            Complex64::new(vals[2 * i], vals[2 * i + 1])
                        }));
                    }
                }
                _ => return Err(err(n, &format!("unknown key `{key}`"))),
            }
        }
        paths.ok_or_else(|| err(0, "missing paths"))?;
        let gains = gains
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| err(0, "missing gain line"))?;
        let delays = delays
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| err(0, "missing delay line"))?;
        Self::new(
            gains,
            delays,
            interval.ok_or_else(|| err(0, "missing symbol_interval"))?,
        )
    }
}

/// Draw an `L`-path channel: delays i.i.d. uniform on `delay_range`
/// (seconds), `h_l = g_l a(theta_l)` with `g_l ~ CN(0, 1/L)` and
/// `theta_l ~ U[-60, 60]` degrees. Angles are redrawn while `H^H H` is
/// ill-conditioned.
pub fn generate_channel<R: Rng + ?Sized>(
    antennas: usize,
    paths: usize,
    symbol_interval: f64,
    delay_range: (f64, f64),
    rng: &mut R,
) -> Result<PathChannel, ChannelError> {
    if paths == 0 {
        return Err(ChannelError::NoPaths);
    }
    if antennas < paths {
        return Err(ChannelError::TooFewAntennas { antennas, paths });
    }
    let (lo, hi) = delay_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(ChannelError::DelayRange(lo, hi));
    }
    let delays: Vec<f64> = (0..paths).map(|_| rng.random_range(lo..hi)).collect();
    let coeffs: Vec<Complex64> = (0..paths)
        .map(|_| complex_normal(rng, 1.0 / paths as f64))
        .collect();
    let max_angle = 60f64.to_radians();
    for _ in 0..MAX_REDRAWS {
        let gains = coeffs
            .iter()
            .map(|&g| steering_vector(antennas, rng.random_range(-max_angle..max_angle)) * g)
            .collect();
        let ch = PathChannel::new(gains, delays.clone(), symbol_interval)?;
        if ch.gram_condition() <= MAX_GRAM_CONDITION {
            return Ok(ch);
        }
    }
    Err(ChannelError::RankDeficient(MAX_REDRAWS))
}

/// Received scalar signal `y(t) = sum_l h_l^H x(t - tau_l)`, noise-free.
///
/// Each path's delay is applied as an exact spectral phase ramp; the output
/// is extended by `ceil(tau_max / dt)` samples.
pub fn apply_channel(tx: &AnalogGrid, ch: &PathChannel) -> Result<AnalogGrid, ChannelError> {
    if tx.is_empty() {
        return Err(ChannelError::GridTooShort);
    }
    if tx.antennas() != ch.antennas() {
        return Err(ChannelError::AntennaMismatch {
            grid: tx.antennas(),
            channel: ch.antennas(),
        });
    }
    if (tx.symbol_interval - ch.symbol_interval).abs() > 1e-9 * ch.symbol_interval {
        return Err(ChannelError::RateMismatch {
            grid: tx.symbol_interval,
            channel: ch.symbol_interval,
        });
    }
    let n = tx.len();
    if tx.samples.iter().any(|s| s.len() != n) {
        return Err(ChannelError::RaggedGrid);
    }
    let dt = tx.spacing();
    let out_len = n + (ch.max_delay() / dt).ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (h, &tau) in ch.gains.iter().zip(&ch.delays) {
        let mut combined = vec![Complex64::new(0.0, 0.0); n];
        for (stream, hm) in tx.samples.iter().zip(h.iter()) {
            let w = hm.conj();
            for (c, &x) in combined.iter_mut().zip(stream) {
                *c += w * x;
            }
        }
        let delayed = spectral::delay(&combined, tau / dt, out_len);
        for (o, d) in out.iter_mut().zip(delayed) {
            *o += d;
        }
    }
    Ok(AnalogGrid::scalar(
        out,
        tx.oversampling,
        tx.symbol_interval,
        tx.start,
    ))
}

/// Add white noise of two-sided PSD `noise_psd`: variance `noise_psd / dt`
/// per grid sample, so unit-energy matched filtering yields `CN(0, noise_psd)`.
pub fn add_awgn<R: Rng + ?Sized>(
    signal: &AnalogGrid,
    noise_psd: f64,
    rng: &mut R,
) -> Result<AnalogGrid, ChannelError> {
    if !(noise_psd >= 0.0) {
        return Err(ChannelError::NegativeNoise(noise_psd));
    }
    let mut out = signal.clone();
    if noise_psd == 0.0 {
        return Ok(out);
    }
    let var = noise_psd / signal.spacing();
    for stream in out.samples.iter_mut() {
        for v in stream.iter_mut() {
            *v += complex_normal(rng, var);
        }
    }
    Ok(out)
}
