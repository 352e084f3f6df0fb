//! C ABI over `rabi_est`.
//!
//! Every function returns a [`RabiStatus`] and writes results through out
//! pointers. Drive configurations and priors are opaque heap handles owned by
//! the caller and released with their `_free` functions. The message of the
//! most recent failure on the calling thread is available from
//! [`rabi_last_error_message`].

use rabi_est::frequentist::{self, Ambiguity, RootStatus};
use rabi_est::posterior::{self, Counts, PosteriorSpec};
use rabi_est::{dynamics, fisher, Error, FieldConfig, Prior, SupportWindow};
use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    /// Argument or data outside the model's domain.
    Domain = 3,
    /// A numerical procedure failed to converge.
    Numerical = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabiRootStatus {
    Accepted = 0,
    RejectedNegative = 1,
    Boundary = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabiAmbiguity {
    Unambiguous = 0,
    Ambiguous = 1,
}

/// Opaque drive configuration.
pub struct RabiField(FieldConfig);

/// Opaque prior.
pub struct RabiPrior(Prior);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> RabiStatus {
    match e {
        Error::InvalidConfig(_) => RabiStatus::InvalidConfig,
        Error::NonConvergence(_) | Error::EvidenceUnderflow => RabiStatus::Numerical,
        _ => RabiStatus::Domain,
    }
}

fn guard<F: FnOnce() -> Result<(), RabiStatus>>(f: F) -> RabiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RabiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside rabi_est".into());
            RabiStatus::Panic
        }
    }
}

fn lift<T>(r: rabi_est::Result<T>) -> Result<T, RabiStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> RabiStatus {
    set_error("null pointer argument".into());
    RabiStatus::NullPointer
}

unsafe fn field<'a>(p: *const RabiField) -> Result<&'a FieldConfig, RabiStatus> {
    p.as_ref().map(|f| &f.0).ok_or_else(null)
}

unsafe fn prior<'a>(p: *const RabiPrior) -> Result<&'a Prior, RabiStatus> {
    p.as_ref().map(|f| &f.0).ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), RabiStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rabi_version() -> *const c_char {
    const V: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rabi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be a valid pointer to a `RabiField*`.
#[no_mangle]
pub unsafe extern "C" fn rabi_field_new(omega: f64, b0: f64, theta: f64, out: *mut *mut RabiField) -> RabiStatus {
    guard(|| {
        let cfg = lift(FieldConfig::new(omega, b0, theta))?;
        put(out, Box::into_raw(Box::new(RabiField(cfg))))
    })
}

/// # Safety
/// `f` must be null or a handle from [`rabi_field_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rabi_field_free(f: *mut RabiField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_prob_detect(f: *const RabiField, omega0: f64, out: *mut f64) -> RabiStatus {
    guard(|| put(out, dynamics::prob_detect(field(f)?, omega0)))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_cfi(f: *const RabiField, omega0: f64, out: *mut f64) -> RabiStatus {
    guard(|| {
        let v = lift(fisher::cfi(field(f)?, omega0))?;
        put(out, v)
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_qfi(f: *const RabiField, omega0: f64, out: *mut f64) -> RabiStatus {
    guard(|| put(out, fisher::qfi(field(f)?, omega0)))
}

/// Both ML roots for sample mean `xbar`.
///
/// # Safety
/// `roots` and `statuses` must point to two elements each; `ambiguity` to one.
#[no_mangle]
pub unsafe extern "C" fn rabi_ml_estimate(
    f: *const RabiField,
    xbar: f64,
    roots: *mut f64,
    statuses: *mut RabiRootStatus,
    ambiguity: *mut RabiAmbiguity,
) -> RabiStatus {
    guard(|| {
        if roots.is_null() || statuses.is_null() || ambiguity.is_null() {
            return Err(null());
        }
        let r = lift(frequentist::ml_estimate(xbar, field(f)?))?;
        for (i, root) in r.roots.iter().enumerate().take(2) {
            roots.add(i).write(root.value);
            statuses.add(i).write(match root.status {
                RootStatus::Accepted => RabiRootStatus::Accepted,
                RootStatus::RejectedNegative => RabiRootStatus::RejectedNegative,
                RootStatus::Boundary => RabiRootStatus::Boundary,
            });
        }
        ambiguity.write(match r.ambiguity {
            Ambiguity::Ambiguous => RabiAmbiguity::Ambiguous,
            _ => RabiAmbiguity::Unambiguous,
        });
        Ok(())
    })
}

unsafe fn new_prior(p: rabi_est::Result<Prior>, out: *mut *mut RabiPrior) -> Result<(), RabiStatus> {
    let p = lift(p)?;
    put(out, Box::into_raw(Box::new(RabiPrior(p))))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rabi_prior_uniform(lower: f64, upper: f64, out: *mut *mut RabiPrior) -> RabiStatus {
    guard(|| new_prior(SupportWindow::new(lower, upper).map(Prior::uniform), out))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rabi_prior_gaussian(
    lower: f64,
    upper: f64,
    mean: f64,
    sigma: f64,
    out: *mut *mut RabiPrior,
) -> RabiStatus {
    guard(|| new_prior(SupportWindow::new(lower, upper).and_then(|w| Prior::gaussian(w, mean, sigma)), out))
}

/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rabi_prior_jeffreys(
    f: *const RabiField,
    lower: f64,
    upper: f64,
    out: *mut *mut RabiPrior,
) -> RabiStatus {
    guard(|| {
        let cfg = *field(f)?;
        new_prior(SupportWindow::new(lower, upper).and_then(|w| Prior::jeffreys(cfg, w)), out)
    })
}

/// # Safety
/// `p` must be null or a prior handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rabi_prior_free(p: *mut RabiPrior) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn spec(f: *const RabiField, p: *const RabiPrior, n: f64, k: f64) -> Result<PosteriorSpec, RabiStatus> {
    let cfg = *field(f)?;
    let prior = lift(prior(p)?.with_field(cfg))?;
    let counts = lift(Counts::new(n, k))?;
    Ok(PosteriorSpec::new(counts, cfg, prior))
}

/// Posterior mean for `k` photons in `n` gates (`k` may be non-integer).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_mmse(
    f: *const RabiField,
    p: *const RabiPrior,
    n: f64,
    k: f64,
    out: *mut f64,
) -> RabiStatus {
    guard(|| {
        let s = spec(f, p, n, k)?;
        let v = lift(posterior::mmse(&s))?;
        put(out, v)
    })
}

/// Highest posterior maximum on a grid of `grid_points` nodes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_map(
    f: *const RabiField,
    p: *const RabiPrior,
    n: f64,
    k: f64,
    grid_points: usize,
    out: *mut f64,
) -> RabiStatus {
    guard(|| {
        let s = spec(f, p, n, k)?;
        let r = lift(posterior::map(&s, grid_points))?;
        let best = r.global().map(|m| m.value).ok_or_else(|| {
            set_error("posterior has no finite maximum".into());
            RabiStatus::Numerical
        })?;
        put(out, best)
    })
}
