//! C ABI over `uotlab`.
//!
//! Every function returns a [`UotStatus`]; on failure the message is kept in
//! a thread-local buffer readable through [`uot_last_error`]. Measures and
//! potentials cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Strings returned by the library are
//! released with [`uot_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uotlab::harness::{rate_exponent_hr, rate_exponent_ours};
use uotlab::semidual::{semidual_value, stability_report};
use uotlab::{DiscreteMeasure, Entropy, EntropyKind, Error, Potential, PotentialSpec, PrimalOptions, SemiDualProblem};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    OutsideSupport = 4,
    ConjugateOverflow = 5,
    OptimizationFailed = 6,
    Unsupported = 7,
    Io = 8,
    Numerical = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UotEntropyKind {
    Balanced = 0,
    Kl = 1,
    Chi2 = 2,
}

/// Opaque weighted point cloud.
pub struct UotMeasure(DiscreteMeasure);

/// Opaque potential with its certified class.
pub struct UotPotential(Potential);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(UotStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_)
            | Error::LengthMismatch { .. }
            | Error::InconsistentClassBounds { .. }
            | Error::UnsortedGrid
            | Error::DegenerateDensity { .. } => UotStatus::InvalidArgument,
            Error::OutsideSupport { .. } | Error::OutsideGrid | Error::ConjugateRangeExceeded { .. } => {
                UotStatus::OutsideSupport
            }
            Error::ConjugateOverflow { .. } | Error::ConjugateOverflowAt { .. } | Error::OutsideDomain { .. } => {
                UotStatus::ConjugateOverflow
            }
            Error::OptimizationFailed(_) | Error::Experiment(_) => UotStatus::OptimizationFailed,
            Error::Unsupported(_) | Error::NotConstructible { .. } => UotStatus::Unsupported,
            Error::Io(_) | Error::Json(_) => UotStatus::Io,
            Error::NonFinite { .. } => UotStatus::Numerical,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(UotStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> UotStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UotStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            UotStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Fail(UotStatus::InvalidUtf8, e.to_string()))?;
    write_out(out, c.into_raw())
}

fn entropy(kind: UotEntropyKind, tau: f64) -> Result<Entropy, Fail> {
    let k = match kind {
        UotEntropyKind::Balanced => EntropyKind::Balanced,
        UotEntropyKind::Kl => EntropyKind::Kl,
        UotEntropyKind::Chi2 => EntropyKind::Chi2,
    };
    Ok(Entropy::new(k, tau)?)
}

fn json_err(e: serde_json::Error) -> Fail {
    Fail(UotStatus::Io, e.to_string())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn uot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uot_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a measure from `n` points stored row-major in `points` (`n * dim`
/// values) and `n` nonnegative weights.
#[no_mangle]
pub unsafe extern "C" fn uot_measure_new(
    points: *const f64,
    n: usize,
    dim: usize,
    weights: *const f64,
    out: *mut *mut UotMeasure,
) -> UotStatus {
    guard(|| {
        let len = n.checked_mul(dim).ok_or_else(|| Fail(UotStatus::InvalidArgument, "size overflow".into()))?;
        let pts = slice(points, len, "points")?.to_vec();
        let w = slice(weights, n, "weights")?.to_vec();
        let m = DiscreteMeasure::from_flat(dim, pts, w)?;
        write_out(out, Box::into_raw(Box::new(UotMeasure(m))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn uot_measure_free(m: *mut UotMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[no_mangle]
pub unsafe extern "C" fn uot_measure_len(m: *const UotMeasure, out: *mut usize) -> UotStatus {
    guard(|| write_out(out, handle(m, "measure")?.0.len()))
}

#[no_mangle]
pub unsafe extern "C" fn uot_measure_mass(m: *const UotMeasure, out: *mut f64) -> UotStatus {
    guard(|| write_out(out, handle(m, "measure")?.0.total_mass()))
}

/// `z(x) = λ/2 |x|² + <a, x> + b`, certified on the ball of `radius`.
#[no_mangle]
pub unsafe extern "C" fn uot_potential_quad_shift(
    lambda: f64,
    a: *const f64,
    dim: usize,
    b: f64,
    radius: f64,
    out: *mut *mut UotPotential,
) -> UotStatus {
    guard(|| {
        let a = slice(a, dim, "a")?;
        let z = Potential::quad_shift(lambda, a, b, radius)?;
        write_out(out, Box::into_raw(Box::new(UotPotential(z))))
    })
}

/// Build a potential from its JSON description, e.g.
/// `{"kind":"max_quad","lambda":1,"theta":[...],"dim":2}`.
#[no_mangle]
pub unsafe extern "C" fn uot_potential_from_json(
    json: *const c_char,
    radius: f64,
    out: *mut *mut UotPotential,
) -> UotStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(UotStatus::InvalidUtf8, e.to_string()))?;
        let spec: PotentialSpec =
            serde_json::from_str(text).map_err(|e| Fail(UotStatus::InvalidArgument, e.to_string()))?;
        let z = spec.build(radius)?;
        write_out(out, Box::into_raw(Box::new(UotPotential(z))))
    })
}

/// JSON description of a potential; release with [`uot_string_free`].
#[no_mangle]
pub unsafe extern "C" fn uot_potential_to_json(z: *const UotPotential, out: *mut *mut c_char) -> UotStatus {
    guard(|| {
        let s = serde_json::to_string(&handle(z, "potential")?.0.to_spec()).map_err(json_err)?;
        write_string(out, s)
    })
}

#[no_mangle]
pub unsafe extern "C" fn uot_potential_free(z: *mut UotPotential) {
    if !z.is_null() {
        drop(Box::from_raw(z));
    }
}

#[no_mangle]
pub unsafe extern "C" fn uot_potential_eval(
    z: *const UotPotential,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> UotStatus {
    guard(|| {
        let z = &handle(z, "potential")?.0;
        write_out(out, z.eval(slice(x, dim, "x")?)?)
    })
}

/// Convex conjugate `z*(y)`.
#[no_mangle]
pub unsafe extern "C" fn uot_potential_conjugate(
    z: *const UotPotential,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> UotStatus {
    guard(|| {
        let z = &handle(z, "potential")?.0;
        write_out(out, z.conjugate_eval(slice(y, dim, "y")?)?)
    })
}

/// Semi-dual objective `J(z)` for the pair `(mu, nu)` on the ball of `radius`.
#[no_mangle]
pub unsafe extern "C" fn uot_semidual_value(
    mu: *const UotMeasure,
    nu: *const UotMeasure,
    kind: UotEntropyKind,
    tau: f64,
    z: *const UotPotential,
    radius: f64,
    out: *mut f64,
) -> UotStatus {
    guard(|| {
        let p = SemiDualProblem::new(
            handle(mu, "mu")?.0.clone(),
            handle(nu, "nu")?.0.clone(),
            entropy(kind, tau)?,
            radius,
        )?;
        write_out(out, semidual_value(&p, &handle(z, "potential")?.0)?)
    })
}

/// Solve the discrete primal problem. `objective` receives the optimal value;
/// `json`, when not null, receives the full solution summary.
#[no_mangle]
pub unsafe extern "C" fn uot_primal_solve(
    mu: *const UotMeasure,
    nu: *const UotMeasure,
    kind: UotEntropyKind,
    tau: f64,
    objective: *mut f64,
    json: *mut *mut c_char,
) -> UotStatus {
    guard(|| {
        let e = entropy(kind, tau)?;
        let s = uotlab::solve_primal(&handle(mu, "mu")?.0, &handle(nu, "nu")?.0, &e, &PrimalOptions::default())?;
        write_out(objective, s.objective)?;
        if !json.is_null() {
            write_string(json, s.to_json()?)?;
        }
        Ok(())
    })
}

/// Stability inequality of `z` against the optimal `z0`, as JSON.
#[no_mangle]
pub unsafe extern "C" fn uot_stability_json(
    mu: *const UotMeasure,
    nu: *const UotMeasure,
    kind: UotEntropyKind,
    tau: f64,
    z: *const UotPotential,
    z0: *const UotPotential,
    radius: f64,
    out: *mut *mut c_char,
) -> UotStatus {
    guard(|| {
        let p = SemiDualProblem::new(
            handle(mu, "mu")?.0.clone(),
            handle(nu, "nu")?.0.clone(),
            entropy(kind, tau)?,
            radius,
        )?;
        let r = stability_report(&p, &handle(z, "z")?.0, &handle(z0, "z0")?.0)?;
        write_string(out, serde_json::to_string(&r).map_err(json_err)?)
    })
}

/// Rate exponent of the plug-in semi-dual estimator for smoothness `alpha`
/// in dimension `d`.
#[no_mangle]
pub extern "C" fn uot_rate_exponent_ours(alpha: f64, d: f64) -> f64 {
    catch_unwind(|| rate_exponent_ours(alpha, d)).unwrap_or(f64::NAN)
}

/// Rate exponent of the Hutter and Rigollet estimator.
#[no_mangle]
pub extern "C" fn uot_rate_exponent_hr(alpha: f64, d: f64) -> f64 {
    catch_unwind(|| rate_exponent_hr(alpha, d)).unwrap_or(f64::NAN)
}
