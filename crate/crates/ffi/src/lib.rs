//! C ABI over the shadow-coupling library.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`ScStatus`]; the message of the last failure on the calling thread is
//! available from [`sc_last_error_message`].

use std::cell::RefCell;
use std::ffi::CString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use libc::c_char;
use shadow_coupling::coupling::{check_martingale_lifted, check_monotone, shadow_coupling, LiftedCoupling};
use shadow_coupling::lift::LiftKind;
use shadow_coupling::lp::{certify_optimal, CERTIFY_TOL};
use shadow_coupling::measure::{leq_convex, DiscreteMeasure};
use shadow_coupling::shadow::shadow;
use shadow_coupling::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotInConvexOrder = 3,
    NotDominated = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScLiftKind {
    LeftCurtain = 0,
    RightCurtain = 1,
    Sunset = 2,
    Middle = 3,
}

impl From<ScLiftKind> for LiftKind {
    fn from(k: ScLiftKind) -> Self {
        match k {
            ScLiftKind::LeftCurtain => LiftKind::LeftCurtain,
            ScLiftKind::RightCurtain => LiftKind::RightCurtain,
            ScLiftKind::Sunset => LiftKind::Sunset,
            ScLiftKind::Middle => LiftKind::Middle,
        }
    }
}

/// Opaque finitely-atomic measure.
pub struct ScMeasure(DiscreteMeasure);

/// Opaque lifted coupling.
pub struct ScLiftedCoupling {
    inner: LiftedCoupling,
    lift: shadow_coupling::lift::Lift,
    nu: DiscreteMeasure,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScStatus {
    match e {
        Error::NotInConvexOrder => ScStatus::NotInConvexOrder,
        Error::NotDominated => ScStatus::NotDominated,
        Error::InvalidAtom(_) | Error::OutOfRange(_) | Error::ZeroMass | Error::InvalidConfig(_) => {
            ScStatus::InvalidArgument
        }
        _ => ScStatus::Internal,
    }
}

fn guard<F: FnOnce() -> Result<(), ScStatus>>(f: F) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside the library".into());
            ScStatus::Panic
        }
    }
}

fn fail(e: Error) -> ScStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null() -> ScStatus {
    set_error("null pointer argument".into());
    ScStatus::NullPointer
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a measure from `n` positions and masses.
///
/// # Safety
/// `xs` and `ms` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_new(
    xs: *const f64,
    ms: *const f64,
    n: usize,
    out: *mut *mut ScMeasure,
) -> ScStatus {
    guard(|| {
        if out.is_null() || (n > 0 && (xs.is_null() || ms.is_null())) {
            return Err(null());
        }
        let (xs, ms) =
            if n == 0 { (&[][..], &[][..]) } else { (slice::from_raw_parts(xs, n), slice::from_raw_parts(ms, n)) };
        let m = DiscreteMeasure::new(xs.iter().copied().zip(ms.iter().copied())).map_err(fail)?;
        *out = Box::into_raw(Box::new(ScMeasure(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_free(m: *mut ScMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of atoms after canonicalization.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_len(m: *const ScMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// Copies the sorted atoms into `xs` and `ms`, each of capacity `cap`.
///
/// # Safety
/// `m` must be a live handle; `xs` and `ms` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sc_measure_atoms(m: *const ScMeasure, xs: *mut f64, ms: *mut f64, cap: usize) -> ScStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(null)?;
        if m.0.len() > cap {
            set_error(format!("need room for {} atoms", m.0.len()));
            return Err(ScStatus::BufferTooSmall);
        }
        if m.0.is_empty() {
            return Ok(());
        }
        if xs.is_null() || ms.is_null() {
            return Err(null());
        }
        for (i, a) in m.0.atoms().iter().enumerate() {
            *xs.add(i) = a.x;
            *ms.add(i) = a.m;
        }
        Ok(())
    })
}

/// Writes whether `a ≤_c b`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_leq_convex(a: *const ScMeasure, b: *const ScMeasure, out: *mut bool) -> ScStatus {
    guard(|| {
        let (a, b) = (a.as_ref().ok_or_else(null)?, b.as_ref().ok_or_else(null)?);
        if out.is_null() {
            return Err(null());
        }
        *out = leq_convex(&a.0, &b.0);
        Ok(())
    })
}

/// Shadow of `source` in `target`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_shadow(
    target: *const ScMeasure,
    source: *const ScMeasure,
    out: *mut *mut ScMeasure,
) -> ScStatus {
    guard(|| {
        let (t, s) = (target.as_ref().ok_or_else(null)?, source.as_ref().ok_or_else(null)?);
        if out.is_null() {
            return Err(null());
        }
        let m = shadow(&t.0, &s.0).map_err(fail)?;
        *out = Box::into_raw(Box::new(ScMeasure(m)));
        Ok(())
    })
}

/// Shadow coupling of `mu` and `nu` along a named lift, each piece split
/// into `refine` parts.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_shadow_coupling(
    mu: *const ScMeasure,
    nu: *const ScMeasure,
    kind: ScLiftKind,
    refine: usize,
    out: *mut *mut ScLiftedCoupling,
) -> ScStatus {
    guard(|| {
        let (mu, nu) = (mu.as_ref().ok_or_else(null)?, nu.as_ref().ok_or_else(null)?);
        if out.is_null() {
            return Err(null());
        }
        let lift = LiftKind::from(kind).build(&mu.0).map_err(fail)?;
        let inner = shadow_coupling(&lift, &nu.0, refine.max(1)).map_err(fail)?;
        *out = Box::into_raw(Box::new(ScLiftedCoupling { inner, lift, nu: nu.0.clone() }));
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sc_lifted_coupling_free(c: *mut ScLiftedCoupling) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of `(u0, u1, x, y, mass)` rows.
///
/// # Safety
/// `c` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sc_lifted_coupling_len(c: *const ScLiftedCoupling) -> usize {
    c.as_ref().map_or(0, |c| c.inner.slices().iter().map(|s| s.coupling.entries().len()).sum())
}

/// Copies the rows into five arrays of capacity `cap`.
///
/// # Safety
/// `c` must be a live handle; each array must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sc_lifted_coupling_rows(
    c: *const ScLiftedCoupling,
    u0: *mut f64,
    u1: *mut f64,
    x: *mut f64,
    y: *mut f64,
    mass: *mut f64,
    cap: usize,
) -> ScStatus {
    guard(|| {
        let n = sc_lifted_coupling_len(c);
        let c = c.as_ref().ok_or_else(null)?;
        if n > cap {
            set_error(format!("need room for {n} rows"));
            return Err(ScStatus::BufferTooSmall);
        }
        if n == 0 {
            return Ok(());
        }
        if [u0, u1, x, y, mass].iter().any(|p| p.is_null()) {
            return Err(null());
        }
        let mut i = 0;
        for s in c.inner.slices() {
            for e in s.coupling.entries() {
                *u0.add(i) = s.u0;
                *u1.add(i) = s.u1;
                *x.add(i) = e.x;
                *y.add(i) = e.y;
                *mass.add(i) = e.mass;
                i += 1;
            }
        }
        Ok(())
    })
}

/// Runs the martingale (tolerance 1e-9), monotone-support (1e-6) and
/// optimality-certificate checks; writes whether all pass.
///
/// # Safety
/// `c` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sc_lifted_coupling_verify(c: *const ScLiftedCoupling, out: *mut bool) -> ScStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let cert = certify_optimal(&c.inner, &c.lift, &c.nu, CERTIFY_TOL).map_err(fail)?;
        *out = check_martingale_lifted(&c.inner, 1e-9).pass && check_monotone(&c.inner, 1e-6).pass && cert.pass;
        Ok(())
    })
}
