//! C ABI over `compvar`.
//!
//! Conventions:
//! - Every fallible function returns a [`CvStatus`]; results go through out
//!   pointers. On failure the out pointer is left untouched and
//!   [`cv_last_error`] describes the problem.
//! - Series and reports are opaque handles created by `cv_series_from_*`
//!   and `cv_backtest_run`, and released with the matching `*_free`.
//! - Panics never cross the boundary; they surface as `CV_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use compvar::dist::DistKind;
use compvar::engine::{run_backtest, BacktestConfig, BacktestReport};
use compvar::io::ingest_prices;
use compvar::{Error, ReturnSeries, TestResult, ViolationLedger};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvStatus {
    Ok = 0,
    NullPointer = 1,
    /// A configuration value is out of its domain (alpha, kappa, dof, window).
    InvalidArgument = 2,
    /// The input data cannot be used (non-finite, degenerate, too short, bad CSV).
    DataError = 3,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 4,
    Io = 5,
    /// A panic or serialization failure inside the library.
    Internal = 6,
}

/// Distribution fitted to each rolling window.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvDist {
    Normal = 0,
    Empirical = 1,
    /// Student-t with `dof` from [`CvBacktestConfig`].
    StudentT = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CvBacktestConfig {
    pub alpha: f64,
    pub kappa: f64,
    pub window: usize,
    pub dist: CvDist,
    /// Degrees of freedom; read only for `CV_DIST_STUDENT_T`.
    pub dof: f64,
    /// Bound L for the admissibility warning; NaN or <= 0 means max |X|.
    pub bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CvLedger {
    pub m00: u64,
    pub m01: u64,
    pub m10: u64,
    pub m11: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CvTestResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CvSummary {
    pub alpha: f64,
    /// NaN when the run used a per-step schedule.
    pub kappa: f64,
    pub window: usize,
    pub steps: usize,
    pub hits: usize,
    pub bound: f64,
    pub alpha_hat_raw: f64,
    pub alpha_hat_weighted: f64,
    pub mean_var_x100: f64,
    pub kupiec: CvTestResult,
    pub christoffersen: CvTestResult,
    pub ledger: CvLedger,
}

/// Opaque return series.
pub struct CvSeries {
    inner: ReturnSeries,
}

/// Opaque backtest report.
pub struct CvReport {
    inner: BacktestReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CvStatus {
    match e {
        Error::Io(_) => CvStatus::Io,
        e if e.is_data_error() => CvStatus::DataError,
        _ => CvStatus::InvalidArgument,
    }
}

fn fail(status: CvStatus, msg: impl Into<String>) -> CvStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), CvStatus>) -> CvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CvStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(CvStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: compvar::Result<T>) -> Result<T, CvStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CvStatus> {
    if p.is_null() {
        Err(fail(CvStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `data` must point to `len` readable values (it may be null when `len == 0`).
unsafe fn slice<'a>(data: *const f64, len: usize) -> Result<&'a [f64], CvStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(data, "data")?;
    Ok(std::slice::from_raw_parts(data, len))
}

fn to_result(r: TestResult) -> CvTestResult {
    CvTestResult {
        statistic: r.statistic,
        p_value: r.p_value,
    }
}

fn to_ledger(l: CvLedger) -> ViolationLedger {
    ViolationLedger::new(l.m00, l.m01, l.m10, l.m11)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_series_from_returns(
    values: *const f64,
    len: usize,
    out: *mut *mut CvSeries,
) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = lift(ReturnSeries::new(slice(values, len)?.to_vec()))?;
        *out = Box::into_raw(Box::new(CvSeries { inner }));
        Ok(())
    })
}

/// Log returns of a positive price sequence.
///
/// # Safety
/// `prices` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_series_from_prices(
    prices: *const f64,
    len: usize,
    out: *mut *mut CvSeries,
) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = lift(compvar::log_returns(slice(prices, len)?))?;
        *out = Box::into_raw(Box::new(CvSeries { inner }));
        Ok(())
    })
}

/// Reads a `date,close` CSV file and converts it to log returns.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_series_from_csv(
    path: *const c_char,
    out: *mut *mut CvSeries,
) -> CvStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(CvStatus::InvalidArgument, "path is not valid UTF-8"))?;
        let inner = lift(ingest_prices(Path::new(path)))?;
        *out = Box::into_raw(Box::new(CvSeries { inner }));
        Ok(())
    })
}

/// # Safety
/// `series` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cv_series_len(series: *const CvSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Realized max |X| of the series; NaN for a null handle.
///
/// # Safety
/// `series` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cv_series_bound(series: *const CvSeries) -> f64 {
    series.as_ref().map_or(f64::NAN, |s| s.inner.bound())
}

/// # Safety
/// `series` must come from a `cv_series_from_*` function and not be freed
/// twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cv_series_free(series: *mut CvSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

fn backtest_config(cfg: &CvBacktestConfig) -> Result<BacktestConfig, CvStatus> {
    let dist = match cfg.dist {
        CvDist::Normal => DistKind::Normal,
        CvDist::Empirical => DistKind::Empirical,
        CvDist::StudentT => {
            if !(cfg.dof > 2.0 && cfg.dof.is_finite()) {
                return lift(Err(Error::InvalidDof(cfg.dof)));
            }
            DistKind::t(cfg.dof)
        }
    };
    let mut out = BacktestConfig::new(cfg.alpha, cfg.kappa, cfg.window, dist);
    if cfg.bound > 0.0 && cfg.bound.is_finite() {
        out.bound = Some(cfg.bound);
    }
    Ok(out)
}

/// Runs the compensated rolling-window backtest.
///
/// # Safety
/// `series` must be a live handle, `cfg` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cv_backtest_run(
    series: *const CvSeries,
    cfg: *const CvBacktestConfig,
    out: *mut *mut CvReport,
) -> CvStatus {
    guard(|| {
        non_null(series, "series")?;
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let cfg = backtest_config(&*cfg)?;
        let inner = lift(run_backtest(&(*series).inner, &cfg))?;
        *out = Box::into_raw(Box::new(CvReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`cv_backtest_run`] and not be freed twice.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cv_report_free(report: *mut CvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of tested steps (`T - W`); 0 for a null handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cv_report_steps(report: *const CvReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.steps())
}

/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cv_report_summary(
    report: *const CvReport,
    out: *mut CvSummary,
) -> CvStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        let r = &(*report).inner;
        let l = r.ledger;
        *out = CvSummary {
            alpha: r.alpha,
            kappa: r.kappa.unwrap_or(f64::NAN),
            window: r.window,
            steps: r.steps(),
            hits: r.hits.iter().filter(|&&h| h).count(),
            bound: r.bound,
            alpha_hat_raw: r.alpha_hat_raw,
            alpha_hat_weighted: r.alpha_hat_weighted(),
            mean_var_x100: r.mean_var_x100,
            kupiec: to_result(r.kupiec),
            christoffersen: to_result(r.christoffersen),
            ledger: CvLedger {
                m00: l.m00,
                m01: l.m01,
                m10: l.m10,
                m11: l.m11,
            },
        };
        Ok(())
    })
}

unsafe fn copy_path<T: Copy>(
    report: *const CvReport,
    buf: *mut T,
    cap: usize,
    pick: impl Fn(&BacktestReport) -> Vec<T>,
) -> CvStatus {
    guard(|| {
        non_null(report, "report")?;
        let src = pick(&(*report).inner);
        if cap < src.len() {
            return Err(fail(
                CvStatus::BufferTooSmall,
                format!("buffer holds {cap} values, need {}", src.len()),
            ));
        }
        if !src.is_empty() {
            non_null(buf, "buf")?;
            ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        }
        Ok(())
    })
}

/// Copies the adjusted VaR path (`cv_report_steps` values) into `buf`.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cv_report_var_adj(
    report: *const CvReport,
    buf: *mut f64,
    cap: usize,
) -> CvStatus {
    copy_path(report, buf, cap, |r| r.var_adj.clone())
}

/// Copies the unadjusted VaR path.
///
/// # Safety
/// As [`cv_report_var_adj`].
#[no_mangle]
pub unsafe extern "C" fn cv_report_var_raw(
    report: *const CvReport,
    buf: *mut f64,
    cap: usize,
) -> CvStatus {
    copy_path(report, buf, cap, |r| r.var_raw.clone())
}

/// Copies the prior-weighted violation-rate path.
///
/// # Safety
/// As [`cv_report_var_adj`].
#[no_mangle]
pub unsafe extern "C" fn cv_report_alpha_hat_path(
    report: *const CvReport,
    buf: *mut f64,
    cap: usize,
) -> CvStatus {
    copy_path(report, buf, cap, |r| r.alpha_hat_weighted_path.clone())
}

/// Copies the hit indicators as 0/1 bytes.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn cv_report_hits(
    report: *const CvReport,
    buf: *mut u8,
    cap: usize,
) -> CvStatus {
    copy_path(report, buf, cap, |r| {
        r.hits.iter().map(|&h| u8::from(h)).collect()
    })
}

/// Serializes the full report as JSON. Free the string with [`cv_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cv_report_to_json(
    report: *const CvReport,
    out: *mut *mut c_char,
) -> CvStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        let json = serde_json::to_string(&(*report).inner)
            .map_err(|e| fail(CvStatus::Internal, e.to_string()))?;
        *out = CString::new(json)
            .map_err(|e| fail(CvStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_inv_normal_cdf(p: f64, out: *mut f64) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(compvar::inv_normal_cdf(p))?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_chi2_1_survival(x: f64, out: *mut f64) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(compvar::chi2_1_survival(x))?;
        Ok(())
    })
}

/// Unconditional-coverage likelihood ratio.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_kupiec(
    ledger: CvLedger,
    alpha: f64,
    out: *mut CvTestResult,
) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = to_result(lift(compvar::kupiec(&to_ledger(ledger), alpha))?);
        Ok(())
    })
}

/// Markov independence likelihood ratio.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_christoffersen(ledger: CvLedger, out: *mut CvTestResult) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = to_result(lift(compvar::christoffersen(&to_ledger(ledger)))?);
        Ok(())
    })
}

/// Transition counts of a 0/1 hit sequence.
///
/// # Safety
/// `hits` must point to `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cv_ledger_from_hits(
    hits: *const u8,
    len: usize,
    out: *mut CvLedger,
) -> CvStatus {
    guard(|| {
        non_null(out, "out")?;
        let bytes: &[u8] = if len == 0 {
            &[]
        } else {
            non_null(hits, "hits")?;
            std::slice::from_raw_parts(hits, len)
        };
        let flags: Vec<bool> = bytes.iter().map(|&b| b != 0).collect();
        let l = lift(ViolationLedger::from_hits(&flags))?;
        *out = CvLedger {
            m00: l.m00,
            m01: l.m01,
            m10: l.m10,
            m11: l.m11,
        };
        Ok(())
    })
}
