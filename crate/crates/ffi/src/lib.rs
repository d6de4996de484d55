//! C ABI over `bandit_cpdp`.
//!
//! Every fallible call returns a [`BcpdpStatus`]; on failure a message is
//! stored per thread and can be fetched with [`bcpdp_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned by the library are owned by the caller and released
//! with [`bcpdp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bandit_cpdp::evaluation::{rdiff, wilcoxon_signed_rank};
use bandit_cpdp::experiment::{run_experiment, ExperimentConfig, ExperimentOutput};
use bandit_cpdp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcpdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Dataset = 4,
    Simulation = 5,
    Statistics = 6,
    Io = 7,
    /// The ratio's denominator is zero.
    Undefined = 8,
    Panic = 9,
}

/// Parsed experiment configuration.
pub struct BcpdpConfig {
    inner: ExperimentConfig,
}

/// Results of one experiment run.
pub struct BcpdpResults {
    inner: ExperimentOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn status_of(e: &Error) -> BcpdpStatus {
    match e {
        Error::Io { .. } => BcpdpStatus::Io,
        Error::Csv { .. } | Error::Dataset { .. } | Error::NonNumericCell { .. } | Error::EmptyDataset => {
            BcpdpStatus::Dataset
        }
        Error::Config(_) | Error::ConfigParse { .. } | Error::ConfigField { .. } => BcpdpStatus::Config,
        Error::UndefinedRatio => BcpdpStatus::Undefined,
        Error::Statistics(_) => BcpdpStatus::Statistics,
        _ => BcpdpStatus::Simulation,
    }
}

fn fail(e: Error) -> BcpdpStatus {
    set_last_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, converting panics into [`BcpdpStatus::Panic`].
fn guard(f: impl FnOnce() -> BcpdpStatus) -> BcpdpStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_last_error("panic inside bandit_cpdp");
        BcpdpStatus::Panic
    })
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BcpdpStatus> {
    if s.is_null() {
        set_last_error("null string argument");
        return Err(BcpdpStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8");
        BcpdpStatus::InvalidUtf8
    })
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Returns the last error message on this thread, or null. Free the result
/// with [`bcpdp_string_free`].
#[no_mangle]
pub extern "C" fn bcpdp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library name and version; static, do not free.
#[no_mangle]
pub extern "C" fn bcpdp_version() -> *const c_char {
    concat!("bandit-cpdp ", env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML config. An empty string gives the default settings.
///
/// # Safety
/// `toml` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_config_from_toml(toml: *const c_char, out: *mut *mut BcpdpConfig) -> BcpdpStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("null output pointer");
            return BcpdpStatus::NullPointer;
        }
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_toml_str(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BcpdpConfig { inner }));
                BcpdpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_config_set_seed(config: *mut BcpdpConfig, seed: u64) -> BcpdpStatus {
    match config.as_mut() {
        Some(c) => {
            c.inner.seed = seed;
            BcpdpStatus::Ok
        }
        None => {
            set_last_error("null config handle");
            BcpdpStatus::NullPointer
        }
    }
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_config_free(config: *mut BcpdpConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the full experiment described by `config`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_experiment_run(config: *const BcpdpConfig, out: *mut *mut BcpdpResults) -> BcpdpStatus {
    guard(|| {
        let Some(config) = config.as_ref() else {
            set_last_error("null config handle");
            return BcpdpStatus::NullPointer;
        };
        if out.is_null() {
            set_last_error("null output pointer");
            return BcpdpStatus::NullPointer;
        }
        match run_experiment(&config.inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BcpdpResults { inner }));
                BcpdpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of completed repetitions.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_len(results: *const BcpdpResults) -> usize {
    results.as_ref().map_or(0, |r| r.inner.results.len())
}

unsafe fn results_string(results: *const BcpdpResults, f: impl FnOnce(&ExperimentOutput) -> String) -> *mut c_char {
    match results.as_ref() {
        Some(r) => to_c_string(f(&r.inner)),
        None => {
            set_last_error("null results handle");
            ptr::null_mut()
        }
    }
}

/// Comparison table as CSV; free with [`bcpdp_string_free`].
///
/// # Safety
/// `results` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_table1_csv(results: *const BcpdpResults) -> *mut c_char {
    results_string(results, |r| r.report.table1_csv())
}

/// Baseline table as CSV; free with [`bcpdp_string_free`].
///
/// # Safety
/// `results` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_table2_csv(results: *const BcpdpResults) -> *mut c_char {
    results_string(results, |r| r.report.table2_csv())
}

/// Run manifest text; free with [`bcpdp_string_free`].
///
/// # Safety
/// `results` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_manifest(results: *const BcpdpResults) -> *mut c_char {
    results_string(results, |r| r.manifest.to_text())
}

/// Writes the report files and manifest into `dir`, creating it if needed.
///
/// # Safety
/// `results` must be a live handle; `dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_write(results: *const BcpdpResults, dir: *const c_char) -> BcpdpStatus {
    guard(|| {
        let Some(results) = results.as_ref() else {
            set_last_error("null results handle");
            return BcpdpStatus::NullPointer;
        };
        let dir = match read_str(dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match results.inner.write_outputs(Path::new(dir)) {
            Ok(()) => BcpdpStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `results` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_results_free(results: *mut BcpdpResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// (TPR + TNR) / 2, with 0.5 when either class is absent.
#[no_mangle]
pub extern "C" fn bcpdp_arm_auc(tp: u64, fp: u64, tn: u64, fn_: u64) -> f64 {
    bandit_cpdp::bandit::arm_auc(tp, fp, tn, fn_)
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples `a[i]`, `b[i]`.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_wilcoxon(a: *const f64, b: *const f64, n: usize, p_value: *mut f64) -> BcpdpStatus {
    guard(|| {
        if a.is_null() || b.is_null() || p_value.is_null() {
            set_last_error("null pointer argument");
            return BcpdpStatus::NullPointer;
        }
        let a = std::slice::from_raw_parts(a, n);
        let b = std::slice::from_raw_parts(b, n);
        let pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
        match wilcoxon_signed_rank(&pairs) {
            Ok(p) => {
                *p_value = p;
                BcpdpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// b / a - 1; [`BcpdpStatus::Undefined`] when `a` is zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bcpdp_rdiff(a: f64, b: f64, out: *mut f64) -> BcpdpStatus {
    if out.is_null() {
        set_last_error("null output pointer");
        return BcpdpStatus::NullPointer;
    }
    match rdiff(a, b) {
        Ok(v) => {
            *out = v;
            BcpdpStatus::Ok
        }
        Err(e) => fail(e),
    }
}
