//! CSV output for campaigns, PAPR samples and Farrow filter responses.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::campaign::{CampaignResults, PaprRecord};
use crate::config::CampaignConfig;
use crate::dsp::{DspError, FarrowFilter};

pub const RESULTS_HEADER: [&str; 11] = [
    "scheme",
    "beamformer",
    "snr_db",
    "trial",
    "ser",
    "sinr_emp_db",
    "sinr_ana_db",
    "se_bps_hz",
    "papr_p50_db",
    "papr_p99_db",
    "seed",
];

pub const PAPR_HEADER: [&str; 5] = ["scheme", "beamformer", "trial", "antenna", "papr_db"];

pub const FILTER_HEADER: [&str; 4] = ["mu", "f", "magnitude_error", "phase_delay_error"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

fn create(path: &Path) -> Result<File, ReportError> {
    File::create(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Path of the sidecar next to a results file.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_results<W: Write>(results: &CampaignResults, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in &results.records {
        w.write_record([
            r.scheme.to_string(),
            r.beamformer.to_string(),
            r.snr_db.to_string(),
            r.trial.to_string(),
            r.ser().to_string(),
            r.sinr_emp_db().to_string(),
            r.sinr_ana_db.to_string(),
            r.se_bps_hz.to_string(),
            r.papr_p50_db.to_string(),
            r.papr_p99_db.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Sidecar text: definitions needed to read the table, then the configuration.
pub fn meta_text(config: &CampaignConfig) -> String {
    format!(
        "# fdam results metadata\n\
         snr_definition = DAM: |sum_l h_l^H f_l^ZF|^2 / N0 with zero-forcing reference beamformers at transmit power 1; \
         OFDM: P T mean_k ||g_k||^2 / N0\n\
         noise = complex white Gaussian, matched-filter output variance N0\n\
         ser = symbol errors over symbols_per_frame counted symbols of one trial\n\
         sinr_emp_db = LS-gain desired power over noiseless residual plus measured noise\n\
         sinr_ana_db = iDAM: full ISI sum; fDAM: ideal fractional delays; OFDM: mean per-subcarrier SNR\n\
         papr = per-antenna, over the steady-state frame body; p50 and p99 across antennas of one trial\n\
         ofdm_beamformer = per-subcarrier MRT\n\
         {}",
        config.to_text()
    )
}

/// Write `results` to `path` and its `.meta` sidecar.
pub fn write_results_file(results: &CampaignResults, path: &Path) -> Result<(), ReportError> {
    write_results(results, create(path)?)?;
    let meta = meta_path(path);
    create(&meta)?
        .write_all(meta_text(&results.config).as_bytes())
        .map_err(|source| ReportError::Io { path: meta, source })
}

pub fn write_papr<W: Write>(rows: &[PaprRecord], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAPR_HEADER)?;
    for p in rows {
        w.write_record([
            p.scheme.to_string(),
            p.beamformer.to_string(),
            p.trial.to_string(),
            p.antenna.to_string(),
            p.papr_db.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_papr_file(rows: &[PaprRecord], path: &Path) -> Result<(), ReportError> {
    write_papr(rows, create(path)?)
}

/// One Farrow response sample: offset, normalized frequency, errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPoint {
    pub mu: f64,
    pub f: f64,
    pub magnitude_error: f64,
    pub phase_delay_error: f64,
}

/// Response errors on `mu` in steps of 0.05 over [0, 1) and `f` in steps
/// of 0.01 over [0, 0.5] cycles per sample.
pub fn filter_report(filter: &FarrowFilter) -> Result<Vec<FilterPoint>, DspError> {
    let mut out = Vec::new();
    for i in 0..20 {
        let mu = i as f64 * 0.05;
        for j in 0..=50 {
            let f = j as f64 * 0.01;
            let e = filter.deviation(mu, f)?;
            out.push(FilterPoint {
                mu,
                f,
                magnitude_error: e.magnitude,
                phase_delay_error: e.phase_delay,
            });
        }
    }
    Ok(out)
}

pub fn write_filter_report<W: Write>(points: &[FilterPoint], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FILTER_HEADER)?;
    for p in points {
        w.write_record([
            p.mu.to_string(),
            p.f.to_string(),
            p.magnitude_error.to_string(),
            p.phase_delay_error.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_filter_report_file(points: &[FilterPoint], path: &Path) -> Result<(), ReportError> {
    write_filter_report(points, create(path)?)
}
