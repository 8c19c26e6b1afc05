//! C ABI for the `softbend` simulator.
//!
//! Every fallible function returns an [`SbStatus`]-valued `int32_t`; on
//! failure a message is available from [`sb_last_error`] on the same thread.
//! Handles are opaque and must be released with the matching `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use softbend::io::write_trace;
use softbend::{compute_metrics, load_config, run_episode, EpisodeTrace, Error, Mode, RunConfig};

/// Status codes returned by every fallible call.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Runtime = 4,
    Io = 5,
    OutOfBounds = 6,
    Panic = 7,
}

/// Controller variants.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbMode {
    Pid = 0,
    FfStatic = 1,
    FfAdaptive = 2,
    FbAdaptive = 3,
    TwoDof = 4,
}

fn mode_from_raw(raw: i32) -> Option<Mode> {
    Some(match raw {
        x if x == SbMode::Pid as i32 => Mode::Pid,
        x if x == SbMode::FfStatic as i32 => Mode::FfStatic,
        x if x == SbMode::FfAdaptive as i32 => Mode::FfAdaptive,
        x if x == SbMode::FbAdaptive as i32 => Mode::FbAdaptive,
        x if x == SbMode::TwoDof as i32 => Mode::TwoDof,
        _ => return None,
    })
}

/// Opaque run configuration.
pub struct SbConfig(RunConfig);

/// Opaque episode trace.
pub struct SbTrace(EpisodeTrace);

/// One logged tick.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SbSample {
    pub t_s: f64,
    pub theta_ref_deg: f64,
    pub theta_meas_deg: f64,
    pub error_deg: f64,
    pub p_ref_kpa: f64,
    pub p_meas_kpa: f64,
    pub u_v: f64,
    pub kp_gain: f64,
    pub kff_gain: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SbMetrics {
    pub e_max_deg: f64,
    pub e_min_deg: f64,
    pub abs_e_ave_pct: f64,
    pub rmse_deg: f64,
    pub var_deg2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: SbStatus, msg: impl Into<String>) -> i32 {
    set_error(msg);
    status as i32
}

fn status_of(err: &Error) -> SbStatus {
    match err {
        Error::Validation { .. } | Error::Parse(_) => SbStatus::Config,
        Error::Io { .. } | Error::Csv { .. } => SbStatus::Io,
        _ => SbStatus::Runtime,
    }
}

fn from_error(err: Error) -> i32 {
    fail(status_of(&err), err.to_string())
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(SbStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, i32> {
    if p.is_null() {
        return Err(fail(SbStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SbStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

macro_rules! deref {
    ($p:expr, $name:literal) => {
        match $p.as_ref() {
            Some(v) => v,
            None => return fail(SbStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

macro_rules! deref_mut {
    ($p:expr, $name:literal) => {
        match $p.as_mut() {
            Some(v) => v,
            None => return fail(SbStatus::NullPointer, concat!("`", $name, "` is null")),
        }
    };
}

/// Message describing the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default configuration. Never null.
#[no_mangle]
pub extern "C" fn sb_config_default() -> *mut SbConfig {
    Box::into_raw(Box::new(SbConfig(RunConfig::default())))
}

/// Loads and validates a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_config_load(path: *const c_char, out: *mut *mut SbConfig) -> i32 {
    guard(|| {
        let out = deref_mut!(out, "out");
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match load_config(Path::new(path)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(SbConfig(cfg)));
                SbStatus::Ok as i32
            }
            Err(e) => from_error(e),
        }
    })
}

/// Parses and validates config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_config_parse(text: *const c_char, out: *mut *mut SbConfig) -> i32 {
    guard(|| {
        let out = deref_mut!(out, "out");
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(code) => return code,
        };
        match RunConfig::from_toml_str(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(SbConfig(cfg)));
                SbStatus::Ok as i32
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets a numeric entry by dotted key, e.g. `tuner.kappa`. The config is
/// unchanged on failure.
///
/// # Safety
/// `cfg` must come from this library; `key` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sb_config_set(cfg: *mut SbConfig, key: *const c_char, value: f64) -> i32 {
    guard(|| {
        let cfg = deref_mut!(cfg, "cfg");
        let key = match str_arg(key, "key") {
            Ok(k) => k,
            Err(code) => return code,
        };
        match cfg.0.with_override(key, value) {
            Ok(next) => {
                cfg.0 = next;
                SbStatus::Ok as i32
            }
            Err(e) => from_error(e),
        }
    })
}

/// `mode` is one of the `SbMode` values.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sb_config_set_mode(cfg: *mut SbConfig, mode: i32) -> i32 {
    guard(|| {
        let cfg = deref_mut!(cfg, "cfg");
        match mode_from_raw(mode) {
            Some(m) => {
                cfg.0.tuner.mode = m;
                SbStatus::Ok as i32
            }
            None => fail(SbStatus::Config, format!("unknown mode {mode}")),
        }
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sb_config_set_seed(cfg: *mut SbConfig, seed: u64) -> i32 {
    guard(|| {
        let cfg = deref_mut!(cfg, "cfg");
        cfg.0.seed = seed;
        SbStatus::Ok as i32
    })
}

/// Releases a config. Null is ignored.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sb_config_free(cfg: *mut SbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one episode in the config's mode.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_run_episode(cfg: *const SbConfig, out: *mut *mut SbTrace) -> i32 {
    guard(|| {
        let cfg = deref!(cfg, "cfg");
        let out = deref_mut!(out, "out");
        match run_episode(&cfg.0) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(SbTrace(trace)));
                SbStatus::Ok as i32
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of samples; 0 for null.
///
/// # Safety
/// `trace` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_len(trace: *const SbTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_sample(trace: *const SbTrace, index: usize, out: *mut SbSample) -> i32 {
    guard(|| {
        let trace = deref!(trace, "trace");
        let out = deref_mut!(out, "out");
        let Some(s) = trace.0.samples.get(index) else {
            return fail(
                SbStatus::OutOfBounds,
                format!("index {index} out of bounds for {} samples", trace.0.len()),
            );
        };
        *out = SbSample {
            t_s: s.t,
            theta_ref_deg: s.theta_ref,
            theta_meas_deg: s.theta_meas,
            error_deg: s.error,
            p_ref_kpa: s.p_ref,
            p_meas_kpa: s.p_meas,
            u_v: s.u,
            kp_gain: s.kp,
            kff_gain: s.kff,
        };
        SbStatus::Ok as i32
    })
}

/// # Safety
/// `trace` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_metrics(trace: *const SbTrace, out: *mut SbMetrics) -> i32 {
    guard(|| {
        let trace = deref!(trace, "trace");
        let out = deref_mut!(out, "out");
        match compute_metrics(&trace.0) {
            Ok(m) => {
                *out = SbMetrics {
                    e_max_deg: m.e_max,
                    e_min_deg: m.e_min,
                    abs_e_ave_pct: m.abs_e_ave_pct,
                    rmse_deg: m.rmse,
                    var_deg2: m.var,
                };
                SbStatus::Ok as i32
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes the trace CSV.
///
/// # Safety
/// `trace` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_write_csv(trace: *const SbTrace, path: *const c_char) -> i32 {
    guard(|| {
        let trace = deref!(trace, "trace");
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match write_trace(&trace.0, Path::new(path)) {
            Ok(()) => SbStatus::Ok as i32,
            Err(e) => from_error(e),
        }
    })
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sb_trace_free(trace: *mut SbTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
