//! C ABI over the `fdam` simulator.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `_free`. Every call returns an [`FdamStatus`]; the message of the last
//! failure on the calling thread is available from
//! [`fdam_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fdam::campaign::{run_campaign, Campaign, CampaignResults};
use fdam::config::CampaignConfig;
use fdam::dsp::FarrowFilter;
use fdam::report::write_results_file;
use fdam::tx::Scheme;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Simulation = 4,
    Io = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Validated campaign configuration with its pulse and Farrow filter.
pub struct FdamCampaign(Campaign);

/// Sorted result rows of a finished campaign.
pub struct FdamResults(CampaignResults);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdamRow {
    /// 0 = iDAM, 1 = fDAM, 2 = OFDM.
    pub scheme: u32,
    /// 0 = ZF, 1 = MRT, 2 = MMSE.
    pub beamformer: u32,
    pub snr_db: f64,
    pub trial: u64,
    pub errors: u64,
    pub symbols: u64,
    pub ser: f64,
    pub sinr_emp_db: f64,
    pub sinr_ana_db: f64,
    pub se_bps_hz: f64,
    pub papr_p50_db: f64,
    pub papr_p99_db: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: FdamStatus, msg: impl ToString) -> FdamStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> FdamStatus) -> FdamStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(FdamStatus::Panic, "panic inside fdam"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, FdamStatus> {
    if s.is_null() {
        return Err(fail(FdamStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(FdamStatus::InvalidUtf8, e))
}

fn code<T: Copy + PartialEq>(all: &[T], v: T) -> u32 {
    all.iter().position(|&x| x == v).unwrap_or(0) as u32
}

/// Copy the last error message of this thread, NUL-terminated, into `buf`.
/// `needed` (optional) receives the required size including the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn fdam_last_error_message(
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> FdamStatus {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !needed.is_null() {
            *needed = msg.len() + 1;
        }
        if len < msg.len() + 1 {
            return FdamStatus::BufferTooSmall;
        }
        if buf.is_null() {
            return FdamStatus::NullPointer;
        }
        ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast(), msg.len());
        *buf.add(msg.len()) = 0;
        FdamStatus::Ok
    })
}

/// Parse and validate a `key = value` configuration.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdam_campaign_new(
    config: *const c_char,
    out: *mut *mut FdamCampaign,
) -> FdamStatus {
    guard(|| {
        if out.is_null() {
            return fail(FdamStatus::NullPointer, "null output handle");
        }
        let text = match text(config) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match CampaignConfig::parse(text) {
            Ok(c) => c,
            Err(e) => return fail(FdamStatus::InvalidConfig, e),
        };
        match Campaign::new(cfg) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(FdamCampaign(c)));
                FdamStatus::Ok
            }
            Err(e @ fdam::campaign::CampaignError::Config(_)) => fail(FdamStatus::InvalidConfig, e),
            Err(e) => fail(FdamStatus::Simulation, e),
        }
    })
}

/// # Safety
/// `campaign` must come from [`fdam_campaign_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fdam_campaign_free(campaign: *mut FdamCampaign) {
    if !campaign.is_null() {
        drop(Box::from_raw(campaign));
    }
}

/// Run every trial.
///
/// # Safety
/// `campaign` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdam_campaign_run(
    campaign: *const FdamCampaign,
    out: *mut *mut FdamResults,
) -> FdamStatus {
    guard(|| {
        if campaign.is_null() || out.is_null() {
            return fail(FdamStatus::NullPointer, "null handle");
        }
        match run_campaign(&(*campaign).0.config) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(FdamResults(r)));
                FdamStatus::Ok
            }
            Err(e) => fail(FdamStatus::Simulation, e),
        }
    })
}

/// Text record of the channel drawn for `trial`, NUL-terminated.
///
/// # Safety
/// `campaign` must be a live handle; `buf` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fdam_campaign_channel_record(
    campaign: *const FdamCampaign,
    trial: u64,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> FdamStatus {
    guard(|| {
        if campaign.is_null() {
            return fail(FdamStatus::NullPointer, "null handle");
        }
        let record = match (*campaign).0.channel(trial as usize) {
            Ok(ch) => ch.to_record(),
            Err(e) => return fail(FdamStatus::Simulation, e),
        };
        if !needed.is_null() {
            *needed = record.len() + 1;
        }
        if len < record.len() + 1 {
            return fail(
                FdamStatus::BufferTooSmall,
                format!("need {} bytes", record.len() + 1),
            );
        }
        if buf.is_null() {
            return fail(FdamStatus::NullPointer, "null buffer");
        }
        ptr::copy_nonoverlapping(record.as_ptr(), buf.cast(), record.len());
        *buf.add(record.len()) = 0;
        FdamStatus::Ok
    })
}

/// # Safety
/// `results` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdam_results_len(results: *const FdamResults) -> usize {
    if results.is_null() {
        0
    } else {
        (*results).0.records.len()
    }
}

/// # Safety
/// `results` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdam_results_row(
    results: *const FdamResults,
    index: usize,
    out: *mut FdamRow,
) -> FdamStatus {
    if results.is_null() || out.is_null() {
        return fail(FdamStatus::NullPointer, "null handle");
    }
    let results = &*results;
    let Some(r) = results.0.records.get(index) else {
        return fail(FdamStatus::OutOfRange, format!("row {index} out of range"));
    };
    *out = FdamRow {
        scheme: code(&Scheme::ALL, r.scheme),
        beamformer: code(&fdam::beamforming::Beamformer::ALL, r.beamformer),
        snr_db: r.snr_db,
        trial: r.trial as u64,
        errors: r.errors,
        symbols: r.symbols,
        ser: r.ser(),
        sinr_emp_db: r.sinr_emp_db(),
        sinr_ana_db: r.sinr_ana_db,
        se_bps_hz: r.se_bps_hz,
        papr_p50_db: r.papr_p50_db,
        papr_p99_db: r.papr_p99_db,
        seed: r.seed,
    };
    FdamStatus::Ok
}

/// Write the results CSV and its `.meta` sidecar.
///
/// # Safety
/// `results` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fdam_results_write_csv(
    results: *const FdamResults,
    path: *const c_char,
) -> FdamStatus {
    guard(|| {
        if results.is_null() {
            return fail(FdamStatus::NullPointer, "null handle");
        }
        let path = match text(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match write_results_file(&(*results).0, Path::new(path)) {
            Ok(()) => FdamStatus::Ok,
            Err(e) => fail(FdamStatus::Io, e),
        }
    })
}

/// # Safety
/// `results` must come from [`fdam_campaign_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fdam_results_free(results: *mut FdamResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Farrow response error at offset `mu` and frequency `f` (cycles/sample).
///
/// # Safety
/// `magnitude_error` and `phase_delay_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdam_farrow_deviation(
    order: usize,
    mu: f64,
    f: f64,
    magnitude_error: *mut f64,
    phase_delay_error: *mut f64,
) -> FdamStatus {
    guard(|| {
        if magnitude_error.is_null() || phase_delay_error.is_null() {
            return fail(FdamStatus::NullPointer, "null output");
        }
        let e = match FarrowFilter::new(order).and_then(|fl| fl.deviation(mu, f)) {
            Ok(e) => e,
            Err(e) => return fail(FdamStatus::OutOfRange, e),
        };
        *magnitude_error = e.magnitude;
        *phase_delay_error = e.phase_delay;
        FdamStatus::Ok
    })
}
