//! C ABI over the `neurols` core.
//!
//! Instances and policies cross the boundary as opaque handles that must be
//! released with their `*_free` function. Every fallible call returns an
//! [`NlsStatus`]; on failure the message is available from
//! [`nls_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use neurols::evaluation::welch_t;
use neurols::instances::{load_instance, save_instance, Instance, NkInstance};
use neurols::policies::{read_policy_file, BestImprovement, FirstImprovement, OneCommaLambda, Policy};
use neurols::search::{drive, Landscape};
use neurols::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    Panic = 6,
}

/// Built-in baseline policies.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsBaseline {
    BestImprovement = 0,
    FirstImprovement = 1,
    OneCommaLambda = 2,
}

/// Opaque problem instance.
pub struct NlsInstance {
    inner: Instance,
}

/// Opaque move-selection policy.
pub struct NlsPolicy {
    inner: Box<dyn Policy>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NlsStatus {
    match e {
        Error::Io { .. } => NlsStatus::Io,
        Error::Malformed { .. } | Error::Json(_) | Error::Csv(_) | Error::Config(_) => NlsStatus::Parse,
        Error::DimensionMismatch { .. } => NlsStatus::DimensionMismatch,
        _ => NlsStatus::InvalidArgument,
    }
}

struct Fail(NlsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NlsStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> NlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlsStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            NlsStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(NlsStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn bits_arg(bits: *const u8, n: usize, expected: usize) -> Result<Vec<bool>, Fail> {
    if bits.is_null() {
        return Err(null("bits"));
    }
    if n != expected {
        return Err(Error::DimensionMismatch { expected, actual: n }.into());
    }
    Ok(std::slice::from_raw_parts(bits, n).iter().map(|&b| b != 0).collect())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Generate an NK landscape with `n` bits and `k` epistatic links.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nls_nk_generate(n: usize, k: usize, seed: u64, out: *mut *mut NlsInstance) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = NkInstance::generate(n, k, seed)?;
        *out = Box::into_raw(Box::new(NlsInstance { inner: inst.into() }));
        Ok(())
    })
}

/// Load an instance file (`.json` NK or `.qubo` text).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_load(path: *const c_char, out: *mut *mut NlsInstance) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = load_instance(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(NlsInstance { inner: inst }));
        Ok(())
    })
}

/// # Safety
/// `inst` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_save(inst: *const NlsInstance, path: *const c_char) -> NlsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        save_instance(&inst.inner, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_free(inst: *mut NlsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of bits, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_n(inst: *const NlsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.n())
}

/// Fitness of `bits` (one byte per bit, nonzero = 1).
///
/// # Safety
/// `bits` must point to `n` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_evaluate(
    inst: *const NlsInstance,
    bits: *const u8,
    n: usize,
    out: *mut f64,
) -> NlsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = bits_arg(bits, n, inst.inner.n())?;
        *out = inst.inner.evaluate(&x);
        Ok(())
    })
}

/// Writes `Δ_i = f(x) - f(flip_i x)` for every bit into `out[0..n]`.
///
/// # Safety
/// `bits` must point to `n` readable bytes and `out` to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nls_instance_deltas(
    inst: *const NlsInstance,
    bits: *const u8,
    n: usize,
    out: *mut f64,
) -> NlsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = bits_arg(bits, n, inst.inner.n())?;
        let cache = inst.inner.prepare(&x);
        let slice = std::slice::from_raw_parts_mut(out, n);
        inst.inner.deltas_into(&x, &cache, slice);
        Ok(())
    })
}

/// Load a trained policy file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_policy_load(path: *const c_char, out: *mut *mut NlsPolicy) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = read_policy_file(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(NlsPolicy { inner: Box::new(p) }));
        Ok(())
    })
}

/// Create a baseline policy; `lambda` is only read for `OneCommaLambda`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_policy_baseline(kind: NlsBaseline, lambda: usize, out: *mut *mut NlsPolicy) -> NlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: Box<dyn Policy> = match kind {
            NlsBaseline::BestImprovement => Box::new(BestImprovement),
            NlsBaseline::FirstImprovement => Box::new(FirstImprovement),
            NlsBaseline::OneCommaLambda => {
                if lambda == 0 {
                    return Err(Fail(NlsStatus::InvalidArgument, "lambda must be at least 1".into()));
                }
                Box::new(OneCommaLambda::new(lambda))
            }
        };
        *out = Box::into_raw(Box::new(NlsPolicy { inner }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nls_policy_free(policy: *mut NlsPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Run `horizon` moves from `x0` and store the best fitness seen in
/// `out_best`. When `out_actions` is non-null it receives the `horizon`
/// flipped indices.
///
/// # Safety
/// Handles must be live, `x0` must hold `n` bytes, `out_best` must be
/// writable and `out_actions`, when non-null, must hold `horizon` slots.
#[no_mangle]
pub unsafe extern "C" fn nls_run_trajectory(
    inst: *const NlsInstance,
    policy: *const NlsPolicy,
    x0: *const u8,
    n: usize,
    horizon: usize,
    hash_seed: u64,
    out_best: *mut f64,
    out_actions: *mut usize,
) -> NlsStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("instance"))?;
        let policy = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out_best.is_null() {
            return Err(null("out_best"));
        }
        let x = bits_arg(x0, n, inst.inner.n())?;
        let mut actions = Vec::with_capacity(horizon);
        let best = drive(&inst.inner, &x, &policy.inner, horizon, hash_seed, false, |e| {
            actions.push(e.record.action)
        })?;
        *out_best = best;
        if !out_actions.is_null() {
            std::slice::from_raw_parts_mut(out_actions, horizon).copy_from_slice(&actions);
        }
        Ok(())
    })
}

/// Welch's t-test of `a` against `b`.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_welch_t(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_t: *mut f64,
    out_df: *mut f64,
    out_p: *mut f64,
) -> NlsStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out_t.is_null() || out_df.is_null() || out_p.is_null() {
            return Err(null("argument"));
        }
        let w = welch_t(std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb))?;
        *out_t = w.t;
        *out_df = w.df;
        *out_p = w.p;
        Ok(())
    })
}
