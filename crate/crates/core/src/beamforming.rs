//! Path-based transmit beamformers for DAM and per-subcarrier MRT for the
//! OFDM baseline.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{CMatrix, CVector, PathChannel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("{antennas} antennas cannot zero-force {paths} paths")]
    TooFewAntennas { antennas: usize, paths: usize },
    #[error("path Gram matrix is singular")]
    Singular,
    #[error("power budget {0} must be positive")]
    Budget(f64),
    #[error("noise level {0} must be non-negative")]
    Noise(f64),
    #[error("subcarrier count must be positive")]
    Subcarriers,
    #[error("unknown beamformer `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Beamformer {
    Zf,
    Mrt,
    /// Regularized zero forcing.
    Mmse,
}

impl Beamformer {
    pub const ALL: [Beamformer; 3] = [Beamformer::Zf, Beamformer::Mrt, Beamformer::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            Beamformer::Zf => "zf",
            Beamformer::Mrt => "mrt",
            Beamformer::Mmse => "mmse",
        }
    }
}

impl fmt::Display for Beamformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Beamformer {
    type Err = BeamformingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zf" => Ok(Beamformer::Zf),
            "mrt" => Ok(Beamformer::Mrt),
            "mmse" | "rzf" => Ok(Beamformer::Mmse),
            other => Err(BeamformingError::Unknown(other.to_string())),
        }
    }
}

/// Per-path vectors `f_l` with `sum ||f_l||^2 = budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub kind: Beamformer,
    pub vectors: Vec<CVector>,
    /// Energy per symbol interval, `P T`.
    pub budget: f64,
}

impl BeamformerSet {
    pub fn total_power(&self) -> f64 {
        self.vectors.iter().map(|f| f.norm_squared()).sum()
    }

    /// `M x L` matrix `[f_1 ... f_L]`.
    pub fn stacked(&self) -> CMatrix {
        CMatrix::from_columns(&self.vectors)
    }

    /// Coherent gain `sum_l h_l^H f_l`.
    pub fn coherent_gain(&self, ch: &PathChannel) -> Complex64 {
        ch.gains
            .iter()
            .zip(&self.vectors)
            .map(|(h, f)| h.dotc(f))
            .sum()
    }

    /// `cross[l][l'] = h_l^H f_l'`.
    pub fn cross_gains(&self, ch: &PathChannel) -> Vec<Vec<Complex64>> {
        ch.gains
            .iter()
            .map(|h| self.vectors.iter().map(|f| h.dotc(f)).collect())
            .collect()
    }
}

fn check_budget(budget: f64) -> Result<(), BeamformingError> {
    if budget > 0.0 && budget.is_finite() {
        Ok(())
    } else {
        Err(BeamformingError::Budget(budget))
    }
}

fn scaled(kind: Beamformer, directions: CMatrix, budget: f64) -> BeamformerSet {
    let eta = (budget / directions.norm_squared()).sqrt();
    BeamformerSet {
        kind,
        vectors: directions
            .column_iter()
            .map(|c| c.into_owned() * Complex64::from(eta))
            .collect(),
        budget,
    }
}

/// `F = H (H^H H + load I)^{-1}` before power scaling.
fn regularized_inverse(ch: &PathChannel, load: f64) -> Result<CMatrix, BeamformingError> {
    let (m, l) = (ch.antennas(), ch.paths());
    if m < l {
        return Err(BeamformingError::TooFewAntennas {
            antennas: m,
            paths: l,
        });
    }
    let h = ch.stacked();
    let mut gram = h.adjoint() * &h;
    for i in 0..l {
        gram[(i, i)] += load;
    }
    let inv = gram.try_inverse().ok_or(BeamformingError::Singular)?;
    Ok(h * inv)
}

/// Zero forcing: `F = eta H (H^H H)^{-1}`, so `h_l^H f_l' = eta delta_ll'`.
pub fn zf_beamformers(ch: &PathChannel, budget: f64) -> Result<BeamformerSet, BeamformingError> {
    check_budget(budget)?;
    Ok(scaled(
        Beamformer::Zf,
        regularized_inverse(ch, 0.0)?,
        budget,
    ))
}

/// Maximal-ratio transmission: `f_l = c h_l` with one common `c`.
pub fn mrt_beamformers(ch: &PathChannel, budget: f64) -> Result<BeamformerSet, BeamformingError> {
    check_budget(budget)?;
    Ok(scaled(Beamformer::Mrt, ch.stacked(), budget))
}

/// Regularized zero forcing with diagonal loading `L noise / budget`.
pub fn rzf_beamformers(
    ch: &PathChannel,
    budget: f64,
    noise: f64,
) -> Result<BeamformerSet, BeamformingError> {
    check_budget(budget)?;
    if !(noise >= 0.0) {
        return Err(BeamformingError::Noise(noise));
    }
    let load = ch.paths() as f64 * noise / budget;
    if !load.is_finite() {
        // infinite loading: the inverse tends to a scaled identity
        return Ok(BeamformerSet {
            kind: Beamformer::Mmse,
            ..mrt_beamformers(ch, budget)?
        });
    }
    Ok(scaled(
        Beamformer::Mmse,
        regularized_inverse(ch, load)?,
        budget,
    ))
}

pub fn design_beamformers(
    kind: Beamformer,
    ch: &PathChannel,
    budget: f64,
    noise: f64,
) -> Result<BeamformerSet, BeamformingError> {
    match kind {
        Beamformer::Zf => zf_beamformers(ch, budget),
        Beamformer::Mrt => mrt_beamformers(ch, budget),
        Beamformer::Mmse => rzf_beamformers(ch, budget, noise),
    }
}

/// Unit-norm per-subcarrier MRT vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierBeamformerSet {
    pub vectors: Vec<CVector>,
    /// `||g_k||`, the equivalent scalar channel before pulse shaping.
    pub gains: Vec<f64>,
    /// Subcarriers whose channel vanished; their vector is `e_1`.
    pub nulls: Vec<usize>,
}

/// Baseband frequency (Hz) of subcarrier `k`, signed so the upper half of
/// the DFT maps to negative frequencies.
pub fn subcarrier_frequency(k: usize, n_sc: usize, symbol_interval: f64) -> f64 {
    let k = if k < n_sc.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n_sc as f64
    };
    k / (n_sc as f64 * symbol_interval)
}

pub fn ofdm_mrt_beamformers(
    ch: &PathChannel,
    n_sc: usize,
) -> Result<SubcarrierBeamformerSet, BeamformingError> {
    if n_sc == 0 {
        return Err(BeamformingError::Subcarriers);
    }
    let mut out = SubcarrierBeamformerSet {
        vectors: Vec::with_capacity(n_sc),
        gains: Vec::with_capacity(n_sc),
        nulls: Vec::new(),
    };
    for k in 0..n_sc {
        let g = ch.frequency_response(subcarrier_frequency(k, n_sc, ch.symbol_interval));
        let norm = g.norm();
        if norm > 0.0 {
            out.vectors.push(g / Complex64::from(norm));
        } else {
            let mut e1 = CVector::zeros(ch.antennas());
            e1[0] = Complex64::new(1.0, 0.0);
            out.vectors.push(e1);
            out.nulls.push(k);
        }
        out.gains.push(norm);
    }
    Ok(out)
}
