//! C ABI over the `semcom` crate.
//!
//! Every function returns a [`SemcomStatus`]; results come back through out
//! pointers. Handles are opaque and owned by the caller once created, and each
//! has a matching `_free`. On failure the message is kept per thread and can
//! be read with [`semcom_last_error`] until the next failing call on that
//! thread.
//!
//! Panics never cross the boundary: they are reported as
//! `SEMCOM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semcom::config::{default_config, load_config, parse_config};
use semcom::model::SystemConfig;
use semcom::output::write_outputs;
use semcom::policy::{Policy, PolicyTag, ProposedController, QualityOracle};
use semcom::sim::{run_simulation, SimOutput};
use semcom::Error;

/// Outcome of an API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemcomStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range, mis-sized or not valid UTF-8.
    InvalidArgument = 2,
    /// Bad configuration, unknown policy or unknown dataset.
    Config = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// A numerical routine failed (for example a covariance that is not
    /// positive definite).
    Numerical = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Opaque system configuration.
pub struct SemcomConfig {
    inner: SystemConfig,
}

/// Opaque finished simulation run.
pub struct SemcomRun {
    inner: SimOutput,
}

/// Opaque online controller, driven one slot at a time by the caller.
pub struct SemcomController {
    inner: ProposedController,
}

/// Run-level metrics. Averages are arithmetic means of per-user means.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SemcomSummary {
    pub slots: u64,
    pub users: u64,
    pub avg_satisfaction_pct: f64,
    pub avg_psnr_db: f64,
    pub avg_latency_ms: f64,
    /// Objective per slot, averaged over slots.
    pub objective: f64,
    pub inference_ms_mean: f64,
    pub update_ms_mean: f64,
}

/// Metrics of one user.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SemcomUserSummary {
    pub user_id: u32,
    pub satisfaction_pct: f64,
    pub mean_psnr_db: f64,
    pub mean_latency_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SemcomStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::UnknownDataset(_) | Error::UnknownSweepParameter(_) => {
                SemcomStatus::Config
            }
            Error::InvalidArgument(_) => SemcomStatus::InvalidArgument,
            Error::Io { .. } | Error::Format { .. } => SemcomStatus::Io,
            Error::EmptyWindow
            | Error::SingularCovariance
            | Error::EmptyCandidateSet
            | Error::EmptyRecords => SemcomStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SemcomStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SemcomStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SemcomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SemcomStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SemcomStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Checks `out` before building the value so nothing leaks on a null pointer.
unsafe fn new_handle<T>(
    out: *mut *mut T,
    make: impl FnOnce() -> Result<T, Failure>,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(make()?)));
    Ok(())
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn semcom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn semcom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in four-user configuration.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_default(out: *mut *mut SemcomConfig) -> SemcomStatus {
    guard(|| {
        new_handle(out, || {
            Ok(SemcomConfig {
                inner: default_config(),
            })
        })
    })
}

/// Parses a TOML configuration held in memory.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_parse(
    toml: *const c_char,
    out: *mut *mut SemcomConfig,
) -> SemcomStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        new_handle(out, || {
            Ok(SemcomConfig {
                inner: parse_config(text)?,
            })
        })
    })
}

/// Loads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_load(
    path: *const c_char,
    out: *mut *mut SemcomConfig,
) -> SemcomStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        new_handle(out, || {
            Ok(SemcomConfig {
                inner: load_config(Path::new(path))?,
            })
        })
    })
}

/// # Safety
/// `cfg` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_seed(cfg: *mut SemcomConfig, seed: u64) -> SemcomStatus {
    guard(|| {
        handle_mut(cfg, "cfg")?.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_set_slots(
    cfg: *mut SemcomConfig,
    slots: u64,
) -> SemcomStatus {
    guard(|| {
        let slots =
            usize::try_from(slots).map_err(|_| invalid("slot count does not fit in usize"))?;
        handle_mut(cfg, "cfg")?.inner.slots = slots;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle or null; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_num_users(
    cfg: *const SemcomConfig,
    out: *mut usize,
) -> SemcomStatus {
    guard(|| {
        let n = handle(cfg, "cfg")?.inner.num_users();
        write_out(out, n, "out")
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn semcom_config_free(cfg: *mut SemcomConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one policy (`proposed`, `psnr_max`, `latency_min` or
/// `psnr_feasible`) over the configured number of slots.
///
/// # Safety
/// `cfg` must be a live handle; `policy` a NUL-terminated string; `out` valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn semcom_simulate(
    cfg: *const SemcomConfig,
    policy: *const c_char,
    out: *mut *mut SemcomRun,
) -> SemcomStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let tag: PolicyTag = str_arg(policy, "policy")?.parse()?;
        new_handle(out, || {
            Ok(SemcomRun {
                inner: run_simulation(&cfg.inner, tag)?,
            })
        })
    })
}

/// # Safety
/// `run` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn semcom_run_summary(
    run: *const SemcomRun,
    out: *mut SemcomSummary,
) -> SemcomStatus {
    guard(|| {
        let s = &handle(run, "run")?.inner.summary;
        let summary = SemcomSummary {
            slots: s.slots as u64,
            users: s.users.len() as u64,
            avg_satisfaction_pct: s.avg_satisfaction_pct,
            avg_psnr_db: s.avg_psnr_db,
            avg_latency_ms: s.avg_latency_ms,
            objective: s.total_objective,
            inference_ms_mean: s.inference_ms.mean_ms,
            update_ms_mean: s.update_ms.mean_ms,
        };
        write_out(out, summary, "out")
    })
}

/// Metrics of the user at position `index` (0-based, configuration order).
///
/// # Safety
/// `run` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn semcom_run_user_summary(
    run: *const SemcomRun,
    index: usize,
    out: *mut SemcomUserSummary,
) -> SemcomStatus {
    guard(|| {
        let users = &handle(run, "run")?.inner.summary.users;
        let u = users.get(index).ok_or_else(|| {
            invalid(format!(
                "user index {index} out of range (have {})",
                users.len()
            ))
        })?;
        let summary = SemcomUserSummary {
            user_id: u.user_id,
            satisfaction_pct: u.satisfaction_pct,
            mean_psnr_db: u.mean_psnr_db,
            mean_latency_ms: u.mean_latency_ms,
        };
        write_out(out, summary, "out")
    })
}

/// Writes `records.csv` and `summary.json` into `dir`, creating it if needed.
///
/// # Safety
/// `run` and `cfg` must be live handles; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semcom_run_write(
    run: *const SemcomRun,
    cfg: *const SemcomConfig,
    dir: *const c_char,
) -> SemcomStatus {
    guard(|| {
        let run = handle(run, "run")?;
        let cfg = handle(cfg, "cfg")?;
        let dir = str_arg(dir, "dir")?;
        write_outputs(&run.inner, &cfg.inner, Path::new(dir))?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn semcom_run_free(run: *mut SemcomRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Creates an online controller. The configuration is copied.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn semcom_controller_new(
    cfg: *const SemcomConfig,
    out: *mut *mut SemcomController,
) -> SemcomStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        new_handle(out, || {
            Ok(SemcomController {
                inner: ProposedController::new(&cfg.inner)?,
            })
        })
    })
}

struct NoOracle;

impl QualityOracle for NoOracle {
    fn predict(&self, _n: usize, _eps: f64) -> semcom::Result<f64> {
        Err(Error::InvalidArgument(
            "the controller does not query the oracle".into(),
        ))
    }
}

fn check_len(got: usize, want: usize) -> Result<(), Failure> {
    if got != want {
        return Err(invalid(format!("expected {want} users, got {got}")));
    }
    Ok(())
}

/// Chooses the compression ratios for slot `t` from the per-user SNRs (dB).
/// `n` must equal the number of configured users; `cr_out` receives `n` values.
///
/// # Safety
/// `ctl` must be a live handle; `snr_db` readable and `cr_out` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn semcom_controller_decide(
    ctl: *mut SemcomController,
    t: u64,
    snr_db: *const f64,
    n: usize,
    cr_out: *mut f64,
) -> SemcomStatus {
    guard(|| {
        let ctl = handle_mut(ctl, "ctl")?;
        check_len(n, ctl.inner.gps().len())?;
        let snr = slice_arg(snr_db, n, "snr_db")?;
        let out = slice_out(cr_out, n, "cr_out")?;
        let d = ctl.inner.decide(t as usize, snr, &NoOracle)?;
        out.copy_from_slice(&d.cr);
        Ok(())
    })
}

/// Feeds back the quality reported for slot `t` at the CRs actually used.
///
/// # Safety
/// `ctl` must be a live handle; `snr_db`, `cr` and `quality_db` readable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn semcom_controller_observe(
    ctl: *mut SemcomController,
    t: u64,
    snr_db: *const f64,
    cr: *const f64,
    quality_db: *const f64,
    n: usize,
) -> SemcomStatus {
    guard(|| {
        let ctl = handle_mut(ctl, "ctl")?;
        check_len(n, ctl.inner.gps().len())?;
        let snr = slice_arg(snr_db, n, "snr_db")?;
        let cr = slice_arg(cr, n, "cr")?;
        let q = slice_arg(quality_db, n, "quality_db")?;
        ctl.inner.observe(t as usize, snr, cr, q)?;
        Ok(())
    })
}

/// # Safety
/// `ctl` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn semcom_controller_free(ctl: *mut SemcomController) {
    if !ctl.is_null() {
        drop(Box::from_raw(ctl));
    }
}

/// Splits `total_rate` (bits/s) over `n` users in proportion to
/// `sqrt(eps * source_dim)` and reports each user's latency in seconds.
///
/// # Safety
/// `eps` and `source_dim` readable, `rates_out` and `latency_out` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn semcom_allocate_rates(
    eps: *const f64,
    source_dim: *const u64,
    n: usize,
    total_rate: f64,
    bits_per_symbol: u32,
    rates_out: *mut f64,
    latency_out: *mut f64,
) -> SemcomStatus {
    guard(|| {
        let eps = slice_arg(eps, n, "eps")?;
        let dims = slice_arg(source_dim, n, "source_dim")?;
        let rates = slice_out(rates_out, n, "rates_out")?;
        let lat = slice_out(latency_out, n, "latency_out")?;
        let alloc = semcom::rate::allocate_rates(eps, dims, total_rate, bits_per_symbol)?;
        rates.copy_from_slice(&alloc.rates);
        lat.copy_from_slice(&alloc.latencies);
        Ok(())
    })
}

/// Standard-normal quantile of `confidence`, which must lie in (0, 1).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn semcom_confidence_to_beta(confidence: f64, out: *mut f64) -> SemcomStatus {
    guard(|| {
        let beta = semcom::acquisition::confidence_to_beta(confidence)?;
        write_out(out, beta, "out")
    })
}
