//! C ABI over `hjfront`.
//!
//! Objects are opaque handles created by `*_new`/constructor calls and
//! released with the matching `*_free`. Every fallible call returns an
//! [`HjStatus`]; on failure the message is kept per thread and can be read
//! with [`hj_last_error`]. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hjfront::fronttrack::FrontTrace;
use hjfront::iterate::{iterated_minmax, Subdivision};
use hjfront::minmax::{exact_minmax, hopf_lax, minmax_grid, minmax_step, Engine, FiberBox, SamplePlan};
use hjfront::{Error, PLFunction};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPl = 3,
    NotConvex = 4,
    TimeOutOfRange = 5,
    /// Fiber box too small, collision budget exceeded, stale event.
    Numerical = 6,
    Panic = 7,
}

/// Continuous piecewise-linear function with affine tails.
pub struct HjPl(PLFunction);

/// Front-tracking solution on `[0, horizon]`.
pub struct HjTrace(FrontTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HjStatus {
    match e {
        Error::InvalidPl(_) | Error::EmptyInterval { .. } | Error::NonFinite(_) => HjStatus::InvalidPl,
        Error::NotConvex => HjStatus::NotConvex,
        Error::TimeOutOfRange { .. } | Error::BeforeApex { .. } => HjStatus::TimeOutOfRange,
        Error::BoxTooSmall(_) | Error::CollisionBudget(_) | Error::StaleEvent(_) => HjStatus::Numerical,
        _ => HjStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HjStatus>) -> HjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HjStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            HjStatus::Panic
        }
    }
}

fn check<T>(r: hjfront::Result<T>) -> Result<T, HjStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, HjStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer".into());
        HjStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), HjStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(HjStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn hj_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && cap > 0 {
                let n = bytes.len().min(cap - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a PL function from `n >= 1` strictly increasing breakpoints, their
/// values and the two tail slopes.
///
/// # Safety
/// `xs` and `ys` must be valid for `n` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_new(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    left_slope: f64,
    right_slope: f64,
    out: *mut *mut HjPl,
) -> HjStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            set_error("null pointer".into());
            return Err(HjStatus::NullPointer);
        }
        let xs = std::slice::from_raw_parts(xs, n).to_vec();
        let ys = std::slice::from_raw_parts(ys, n).to_vec();
        let f = check(PLFunction::new(xs, ys, left_slope, right_slope))?;
        write(out, Box::into_raw(Box::new(HjPl(f))))
    })
}

/// # Safety
/// `f` must come from this library and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_free(f: *mut HjPl) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_eval(f: *const HjPl, x: f64, out: *mut f64) -> HjStatus {
    guard(|| write(out, deref(f)?.0.eval(x)))
}

/// Number of breakpoints, 0 for a null handle.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_len(f: *const HjPl) -> usize {
    f.as_ref().map_or(0, |f| f.0.len())
}

/// Copies up to `cap` breakpoints and values; `written` receives the count.
///
/// # Safety
/// `xs`, `ys` valid for `cap` writes; `written` for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_data(
    f: *const HjPl,
    xs: *mut f64,
    ys: *mut f64,
    cap: usize,
    written: *mut usize,
) -> HjStatus {
    guard(|| {
        let f = &deref(f)?.0;
        if (xs.is_null() || ys.is_null()) && cap > 0 {
            set_error("null buffer".into());
            return Err(HjStatus::NullPointer);
        }
        let n = f.len().min(cap);
        if n > 0 {
            ptr::copy_nonoverlapping(f.breakpoints().as_ptr(), xs, n);
            ptr::copy_nonoverlapping(f.values().as_ptr(), ys, n);
        }
        write(written, n)
    })
}

/// Tail slopes of `f`.
///
/// # Safety
/// `f` live; `left`, `right` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn hj_pl_tails(f: *const HjPl, left: *mut f64, right: *mut f64) -> HjStatus {
    guard(|| {
        let f = &deref(f)?.0;
        write(left, f.left_tail_slope())?;
        write(right, f.right_tail_slope())
    })
}

/// Front tracking for `u_t + H(u_x) = 0`, `u(0) = v`, up to `horizon`.
///
/// # Safety
/// `v`, `h` live handles; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_front_evolve(
    v: *const HjPl,
    h: *const HjPl,
    horizon: f64,
    out: *mut *mut HjTrace,
) -> HjStatus {
    guard(|| {
        let tr = check(FrontTrace::evolve(&deref(v)?.0, &deref(h)?.0, horizon))?;
        write(out, Box::into_raw(Box::new(HjTrace(tr))))
    })
}

/// # Safety
/// `tr` must come from this library and not be used afterwards; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn hj_front_free(tr: *mut HjTrace) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// # Safety
/// `tr` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_front_eval(tr: *const HjTrace, t: f64, x: f64, out: *mut f64) -> HjStatus {
    guard(|| {
        let u = check(deref(tr)?.0.eval(t, x))?;
        write(out, u)
    })
}

/// Profile at time `t` as a new PL handle.
///
/// # Safety
/// `tr` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_front_profile(tr: *const HjTrace, t: f64, out: *mut *mut HjPl) -> HjStatus {
    guard(|| {
        let p = check(deref(tr)?.0.profile_at(t))?;
        write(out, Box::into_raw(Box::new(HjPl(p))))
    })
}

/// Number of collision events, 0 for a null handle.
///
/// # Safety
/// `tr` live or null.
#[no_mangle]
pub unsafe extern "C" fn hj_front_event_count(tr: *const HjTrace) -> usize {
    tr.as_ref().map_or(0, |t| t.0.events.len())
}

/// Time and place of event `i`.
///
/// # Safety
/// `tr` live; `t`, `x` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn hj_front_event(tr: *const HjTrace, i: usize, t: *mut f64, x: *mut f64) -> HjStatus {
    guard(|| {
        let tr = &deref(tr)?.0;
        let Some(e) = tr.events.get(i) else {
            set_error(format!("event index {i} out of range ({})", tr.events.len()));
            return Err(HjStatus::InvalidArgument);
        };
        write(t, e.time)?;
        write(x, e.x)
    })
}

/// Exact minmax `R^t v(x)`.
///
/// # Safety
/// `v`, `h` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_minmax(v: *const HjPl, h: *const HjPl, t: f64, x: f64, out: *mut f64) -> HjStatus {
    guard(|| {
        let u = check(exact_minmax(&deref(v)?.0, &deref(h)?.0, t, x))?;
        write(out, u)
    })
}

/// Grid minmax and maxmin on an automatic `nx` by `ny` fiber box.
///
/// # Safety
/// `v`, `h` live; output pointers valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn hj_minmax_grid(
    v: *const HjPl,
    h: *const HjPl,
    t: f64,
    x: f64,
    nx: usize,
    ny: usize,
    minmax: *mut f64,
    maxmin: *mut f64,
    tolerance: *mut f64,
) -> HjStatus {
    guard(|| {
        let (v, h) = (&deref(v)?.0, &deref(h)?.0);
        if nx < 2 || ny < 2 {
            set_error("grid needs nx, ny >= 2".into());
            return Err(HjStatus::InvalidArgument);
        }
        let r = check(minmax_grid(v, h, t, x, FiberBox::auto(v, h, t, x, nx, ny)))?;
        write(minmax, r.minmax_value)?;
        write(maxmin, r.maxmin_value)?;
        write(tolerance, r.tolerance)
    })
}

/// One-step minmax profile `R^tau v` (exact engine).
///
/// # Safety
/// `v`, `h` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_minmax_step(v: *const HjPl, h: *const HjPl, tau: f64, out: *mut *mut HjPl) -> HjStatus {
    guard(|| {
        let p = check(minmax_step(&deref(v)?.0, &deref(h)?.0, tau, &SamplePlan::default()))?;
        write(out, Box::into_raw(Box::new(HjPl(p))))
    })
}

/// Iterated minmax over `steps` uniform steps of `[0, horizon]`.
///
/// # Safety
/// `v`, `h` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_iterated_minmax(
    v: *const HjPl,
    h: *const HjPl,
    horizon: f64,
    steps: usize,
    out: *mut *mut HjPl,
) -> HjStatus {
    guard(|| {
        let zeta = check(Subdivision::uniform(horizon, steps))?;
        let tr = check(iterated_minmax(&deref(v)?.0, &deref(h)?.0, &zeta, Engine::Exact))?;
        write(out, Box::into_raw(Box::new(HjPl(tr.last().clone()))))
    })
}

/// Hopf-Lax value for convex `H`.
///
/// # Safety
/// `v`, `h` live; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hj_hopf_lax(v: *const HjPl, h: *const HjPl, t: f64, x: f64, out: *mut f64) -> HjStatus {
    guard(|| {
        let u = check(hopf_lax(&deref(v)?.0, &deref(h)?.0, t, x))?;
        write(out, u)
    })
}
