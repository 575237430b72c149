//! C ABI over the simisac scheduler.
//!
//! Configurations and traces cross the boundary as opaque handles. Every
//! fallible call returns a [`SimisacStatus`]; the message for the most recent
//! failure on the calling thread is available from [`simisac_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use simisac::rates;
use simisac::scenario::{validate_config, ScenarioConfig};
use simisac::scheduler::{run_episode, Baseline};
use simisac::trace::EpisodeTrace;
use simisac::Error;

/// Opaque scenario configuration.
pub struct SimisacConfig(ScenarioConfig);

/// Opaque episode trace.
pub struct SimisacTrace(EpisodeTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimisacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Parse = 4,
    Domain = 5,
    Infeasible = 6,
    Io = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimisacBaseline {
    Proposed = 0,
    RandomSim = 1,
    NoSim = 2,
    CommOnly = 3,
}

impl From<SimisacBaseline> for Baseline {
    fn from(b: SimisacBaseline) -> Self {
        match b {
            SimisacBaseline::Proposed => Baseline::Proposed,
            SimisacBaseline::RandomSim => Baseline::RandomSim,
            SimisacBaseline::NoSim => Baseline::NoSim,
            SimisacBaseline::CommOnly => Baseline::CommOnly,
        }
    }
}

/// Scalar episode summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimisacSummary {
    pub objective: f64,
    pub mean_ee_embb: f64,
    pub mean_ee_urllc: f64,
    /// Average of the per-target mean AoI.
    pub mean_aoi: f64,
    pub violation_rate: f64,
    pub mean_backlog: f64,
    pub minislots: usize,
    pub flagged: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SimisacStatus {
    match err {
        Error::InvalidConfig(_) => SimisacStatus::InvalidConfig,
        Error::Parse { .. } => SimisacStatus::Parse,
        Error::Domain(_) => SimisacStatus::Domain,
        Error::Infeasible(_) => SimisacStatus::Infeasible,
        Error::Io { .. } => SimisacStatus::Io,
        _ => SimisacStatus::Internal,
    }
}

struct Fail(SimisacStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SimisacStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail> + UnwindSafe>(f: F) -> SimisacStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SimisacStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SimisacStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(SimisacStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the most recent failed call on this thread, or NULL after a
/// success. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn simisac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn simisac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Allocate the desk-scale default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_default(out: *mut *mut SimisacConfig) -> SimisacStatus {
    guard(|| {
        let cfg = Box::new(SimisacConfig(ScenarioConfig::desk_scale()));
        write(out, Box::into_raw(cfg), "out")
    })
}

/// Parse a `key = value` configuration text. Unset keys keep their defaults.
///
/// # Safety
/// `src` must be a valid NUL-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_parse(
    src: *const c_char,
    out: *mut *mut SimisacConfig,
) -> SimisacStatus {
    guard(|| {
        let cfg = ScenarioConfig::parse(text(src, "text")?)?;
        write(out, Box::into_raw(Box::new(SimisacConfig(cfg))), "out")
    })
}

/// Set one configuration key using the same syntax as the text format.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_set(
    cfg: *mut SimisacConfig,
    key: *const c_char,
    value: *const c_char,
) -> SimisacStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        cfg.0.set(key, value).map_err(|msg| Fail(SimisacStatus::Parse, format!("{key}: {msg}")))
    })
}

/// Check a configuration. Writes the number of violations to `out_count`
/// and returns `INVALID_CONFIG` when there are any.
///
/// # Safety
/// `cfg` must be a live handle; `out_count` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_validate(
    cfg: *const SimisacConfig,
    out_count: *mut usize,
) -> SimisacStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let v = validate_config(&cfg.0);
        if !out_count.is_null() {
            out_count.write(v.len());
        }
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::InvalidConfig(msgs).into())
        }
    })
}

/// Render a configuration as text. Free the result with [`simisac_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_to_string(
    cfg: *const SimisacConfig,
    out: *mut *mut c_char,
) -> SimisacStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let s = CString::new(cfg.0.to_config_string()).map_err(|e| Fail(SimisacStatus::Internal, e.to_string()))?;
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn simisac_config_free(cfg: *mut SimisacConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run one episode.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn simisac_run_episode(
    cfg: *const SimisacConfig,
    baseline: SimisacBaseline,
    seed: u64,
    out: *mut *mut SimisacTrace,
) -> SimisacStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = run_episode(&cfg.0, baseline.into(), seed)?;
        write(out, Box::into_raw(Box::new(SimisacTrace(trace))), "out")
    })
}

/// # Safety
/// `trace` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_trace_summary(
    trace: *const SimisacTrace,
    out: *mut SimisacSummary,
) -> SimisacStatus {
    guard(|| {
        let s = &trace.as_ref().ok_or_else(|| null("trace"))?.0.summary;
        let mean_aoi = if s.aoi.is_empty() {
            0.0
        } else {
            s.aoi.iter().sum::<f64>() / s.aoi.len() as f64
        };
        let summary = SimisacSummary {
            objective: s.objective,
            mean_ee_embb: s.mean_ee_embb,
            mean_ee_urllc: s.mean_ee_urllc,
            mean_aoi,
            violation_rate: s.violation_rate(),
            mean_backlog: s.mean_backlog,
            minislots: s.minislots,
            flagged: s.flagged,
        };
        write(out, summary, "out")
    })
}

/// Full trace text. Free the result with [`simisac_string_free`].
///
/// # Safety
/// `trace` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_trace_text(
    trace: *const SimisacTrace,
    out: *mut *mut c_char,
) -> SimisacStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let s = CString::new(t.0.to_text()).map_err(|e| Fail(SimisacStatus::Internal, e.to_string()))?;
        write(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `trace` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn simisac_trace_free(trace: *mut SimisacTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn simisac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Inverse Gaussian tail function.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_qfunc_inv(p: f64, out: *mut f64) -> SimisacStatus {
    guard(|| write(out, rates::qfunc_inv(p)?, "out"))
}

/// Finite-blocklength rate in bit/s for one resource block.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_fbl_rate(
    gamma: f64,
    bandwidth: f64,
    minislots: usize,
    blocklength: f64,
    decode_err: f64,
    out: *mut f64,
) -> SimisacStatus {
    guard(|| write(out, rates::fbl_rate(gamma, bandwidth, minislots, blocklength, decode_err)?, "out"))
}

/// Smallest count whose Poisson CDF reaches `gamma`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simisac_poisson_icdf(mean: f64, gamma: f64, out: *mut u64) -> SimisacStatus {
    guard(|| write(out, rates::poisson_icdf(mean, gamma)?, "out"))
}
