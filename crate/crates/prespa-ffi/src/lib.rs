//! C interface to the `prespa` simulation library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible function
//! returns a status code (`PRESPA_OK` on success); the text of the most recent
//! failure on the calling thread is available from
//! [`prespa_last_error_message`].
//!
//! Text outputs use a caller-owned buffer: pass `buf = NULL` to learn the size
//! through `needed` (bytes, excluding the terminating NUL), then call again
//! with `cap >= needed + 1`.

use prespa::budget::{budget_totals, Budget};
use prespa::cli::{run_command, Cardinal, Profile, RunConfig, RunOutput};
use prespa::codes::{cavity_moments, encode};
use prespa::dissipator::{jump_count_probs, JumpProcess};
use prespa::experiments::CodeChoice;
use prespa::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

pub const PRESPA_OK: i32 = 0;
pub const PRESPA_ERR_NULL_POINTER: i32 = 1;
/// Bad argument, configuration or dimension.
pub const PRESPA_ERR_INVALID_ARGUMENT: i32 = 2;
/// A numerical routine failed (integration, fit, optimizer, truncation...).
pub const PRESPA_ERR_NUMERICAL: i32 = 3;
pub const PRESPA_ERR_IO: i32 = 4;
pub const PRESPA_ERR_BUFFER_TOO_SMALL: i32 = 5;
/// An internal panic was caught at the boundary.
pub const PRESPA_ERR_PANIC: i32 = 6;

pub const PRESPA_PROFILE_DESK: i32 = 0;
pub const PRESPA_PROFILE_PAPER: i32 = 1;

pub const PRESPA_CODE_OPTIMAL: i32 = 0;
pub const PRESPA_CODE_EXPERIMENTAL: i32 = 1;

/// Logical cardinal states, in the order +Z, −Z, +X, −X, +Y, −Y.
pub const PRESPA_CARDINAL_PLUS_Z: i32 = 0;
pub const PRESPA_CARDINAL_MINUS_Z: i32 = 1;
pub const PRESPA_CARDINAL_PLUS_X: i32 = 2;
pub const PRESPA_CARDINAL_MINUS_X: i32 = 3;
pub const PRESPA_CARDINAL_PLUS_Y: i32 = 4;
pub const PRESPA_CARDINAL_MINUS_Y: i32 = 5;

/// A resolved run configuration.
pub struct PrespaConfig {
    inner: RunConfig,
}

/// The outcome of one simulation command.
pub struct PrespaResult {
    csv: String,
    summary: String,
    report: String,
    failure: Option<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::InvalidDimension(_) | Error::InvalidInput(_) | Error::Config(_) => PRESPA_ERR_INVALID_ARGUMENT,
        Error::Io(_) => PRESPA_ERR_IO,
        _ => PRESPA_ERR_NUMERICAL,
    }
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PRESPA_OK
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            PRESPA_ERR_PANIC
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(PRESPA_ERR_NULL_POINTER, format!("{what} is null"))
}

fn invalid(msg: String) -> Fail {
    Fail(PRESPA_ERR_INVALID_ARGUMENT, msg)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_text(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    if !needed.is_null() {
        *needed = text.len();
    }
    if buf.is_null() {
        return Ok(());
    }
    if cap < text.len() + 1 {
        return Err(Fail(PRESPA_ERR_BUFFER_TOO_SMALL, format!("buffer holds {cap} bytes, {} needed", text.len() + 1)));
    }
    ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

fn profile(p: i32) -> Result<Profile, Fail> {
    match p {
        PRESPA_PROFILE_DESK => Ok(Profile::Desk),
        PRESPA_PROFILE_PAPER => Ok(Profile::Paper),
        _ => Err(invalid(format!("unknown profile {p}"))),
    }
}

fn code(c: i32) -> Result<CodeChoice, Fail> {
    match c {
        PRESPA_CODE_OPTIMAL => Ok(CodeChoice::Optimal),
        PRESPA_CODE_EXPERIMENTAL => Ok(CodeChoice::Experimental),
        _ => Err(invalid(format!("unknown code {c}"))),
    }
}

fn cardinal(k: i32) -> Result<Cardinal, Fail> {
    const ALL: [Cardinal; 6] = [Cardinal::PlusZ, Cardinal::MinusZ, Cardinal::PlusX, Cardinal::MinusX, Cardinal::PlusY, Cardinal::MinusY];
    usize::try_from(k).ok().and_then(|i| ALL.get(i).copied()).ok_or_else(|| invalid(format!("unknown cardinal state {k}")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prespa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn prespa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default configuration for `profile_id` (`PRESPA_PROFILE_*`).
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn prespa_config_new(profile_id: i32, out: *mut *mut PrespaConfig) -> i32 {
    guard(|| store(out, PrespaConfig { inner: RunConfig::profile(profile(profile_id)?) }))
}

/// Parses a JSON configuration merged over the defaults of `profile_id`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn prespa_config_from_json(json: *const c_char, profile_id: i32, out: *mut *mut PrespaConfig) -> i32 {
    guard(|| {
        let text = str_arg(json, "json")?;
        let cfg = RunConfig::from_json(text, profile(profile_id)?)?;
        store(out, PrespaConfig { inner: cfg })
    })
}

/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn prespa_config_set_seed(cfg: *mut PrespaConfig, seed: u64) -> i32 {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("cfg"))?.inner.seed = seed;
        Ok(())
    })
}

/// Pretty-printed JSON of the full configuration.
///
/// # Safety
/// `cfg` must be a live handle; `buf` must hold `cap` bytes or be NULL;
/// `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn prespa_config_to_json(cfg: *const PrespaConfig, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    guard(|| write_text(&handle(cfg, "cfg")?.inner.to_json(), buf, cap, needed))
}

/// # Safety
/// `cfg` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prespa_config_free(cfg: *mut PrespaConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the command-line subcommand `command` (for example `"budget"` or
/// `"trajectory"`) without writing files. A run whose internal check fails
/// still returns `PRESPA_OK`; see [`prespa_result_failure`].
///
/// # Safety
/// `cfg` must be a live handle, `command` NUL-terminated and `out` valid for
/// writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn prespa_run(cfg: *const PrespaConfig, command: *const c_char, out: *mut *mut PrespaResult) -> i32 {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.inner;
        let name = str_arg(command, "command")?;
        cfg.validate()?;
        let RunOutput { csv, summary, report, failure, .. } = run_command(name, cfg)?;
        store(out, PrespaResult { csv, summary: summary.to_string(), report, failure })
    })
}

/// The run's table in CSV form.
///
/// # Safety
/// As for [`prespa_config_to_json`].
#[no_mangle]
pub unsafe extern "C" fn prespa_result_csv(res: *const PrespaResult, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    guard(|| write_text(&handle(res, "res")?.csv, buf, cap, needed))
}

/// The run's summary as a compact JSON object.
///
/// # Safety
/// As for [`prespa_config_to_json`].
#[no_mangle]
pub unsafe extern "C" fn prespa_result_summary_json(res: *const PrespaResult, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    guard(|| write_text(&handle(res, "res")?.summary, buf, cap, needed))
}

/// Human-readable report lines.
///
/// # Safety
/// As for [`prespa_config_to_json`].
#[no_mangle]
pub unsafe extern "C" fn prespa_result_report(res: *const PrespaResult, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    guard(|| write_text(&handle(res, "res")?.report, buf, cap, needed))
}

/// Failure description of a completed run; an empty string when it passed.
///
/// # Safety
/// As for [`prespa_config_to_json`].
#[no_mangle]
pub unsafe extern "C" fn prespa_result_failure(res: *const PrespaResult, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    guard(|| write_text(handle(res, "res")?.failure.as_deref().unwrap_or(""), buf, cap, needed))
}

/// # Safety
/// `res` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prespa_result_free(res: *mut PrespaResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Writes ⟨n⟩ and ⟨n²⟩ of the two code words as
/// `{n_zero, n_one, n2_zero, n2_one}`.
///
/// # Safety
/// `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn prespa_codeword_moments(code_id: i32, out: *mut f64) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (a, b, c, d) = cavity_moments(&code(code_id)?.words());
        std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&[a, b, c, d]);
        Ok(())
    })
}

/// Probabilities of 0..=jmax compound loss-and-recovery jumps after
/// exposure `kappa_t` for a logical cardinal state in a cavity of dimension
/// `dim`. `probs` receives `jmax + 1` values; `deficit` (may be NULL) the
/// probability of more than `jmax` jumps.
///
/// # Safety
/// `probs` must point to `probs_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn prespa_jump_count_probs(
    code_id: i32,
    cardinal_id: i32,
    dim: usize,
    kappa_t: f64,
    jmax: usize,
    probs: *mut f64,
    probs_len: usize,
    deficit: *mut f64,
) -> i32 {
    guard(|| {
        if probs.is_null() {
            return Err(null("probs"));
        }
        if probs_len < jmax + 1 {
            return Err(Fail(PRESPA_ERR_BUFFER_TOO_SMALL, format!("probs holds {probs_len} values, {} needed", jmax + 1)));
        }
        let psi = encode(&code(code_id)?.words(), &cardinal(cardinal_id)?.amplitudes(), dim)?;
        let jp = JumpProcess::prespa(1.0, dim)?;
        let dist = jump_count_probs(&psi, kappa_t, jmax, &jp)?;
        std::slice::from_raw_parts_mut(probs, jmax + 1).copy_from_slice(&dist.probs);
        if !deficit.is_null() {
            *deficit = dist.deficit;
        }
        Ok(())
    })
}

/// Total longitudinal and transverse logical error rates (ms⁻¹) of the
/// configured budget (the built-in reference when `budget.input` is unset).
///
/// # Safety
/// `cfg` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn prespa_budget_totals(cfg: *const PrespaConfig, longitudinal: *mut f64, transverse: *mut f64) -> i32 {
    guard(|| {
        let cfg = &handle(cfg, "cfg")?.inner;
        if longitudinal.is_null() || transverse.is_null() {
            return Err(null("output"));
        }
        let budget = match &cfg.budget.input {
            Some(path) => Budget::from_json(&std::fs::read_to_string(path).map_err(|e| Fail(PRESPA_ERR_IO, format!("{}: {e}", path.display())))?)?,
            None => Budget::reference(),
        };
        let (l, t) = budget_totals(&budget, &cfg.device)?;
        *longitudinal = l;
        *transverse = t;
        Ok(())
    })
}
