//! C ABI over `thermolanczos`.
//!
//! Every function returns a [`TlStatus`]; results go through out-pointers.
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. The message of the last failure on the
//! calling thread is available from [`tl_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thermolanczos::error::Error;
use thermolanczos::models::CumulantModel;
use thermolanczos::series::lanczos_taylor_f64;
use thermolanczos::spectral::{cf_eval, overlap_integral};
use thermolanczos::tl_solver::{
    gse_bounds, solve_curve_partial, solve_point, LanczosCurve, SolverOptions,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Domain = 4,
    Convergence = 5,
    Numerical = 6,
    NonIntegrable = 7,
    Parse = 8,
    Panic = 9,
}

/// A cumulant model.
pub struct TlModel(CumulantModel);

/// A solved Lanczos curve.
pub struct TlCurve {
    curve: LanczosCurve,
    /// Set when the solve stopped before the end of the grid.
    stopped: Option<Error>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::AtS { source, .. } => status_of(source),
        Error::InvalidModel(_) | Error::Degenerate(_) => TlStatus::InvalidModel,
        Error::Domain { .. } | Error::OutOfSpectrum { .. } | Error::SpectrumBound { .. } | Error::Branch { .. } => {
            TlStatus::Domain
        }
        Error::Convergence { .. } => TlStatus::Convergence,
        Error::NonIntegrable(_) => TlStatus::NonIntegrable,
        Error::Parse(_) => TlStatus::Parse,
        Error::Arity { .. } | Error::UnsupportedOrder { .. } => TlStatus::InvalidArgument,
        _ => TlStatus::Numerical,
    }
}

/// Run `f`, recording errors and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (TlStatus, String)>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (TlStatus, String) {
    (TlStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> (TlStatus, String) {
    (TlStatus::InvalidArgument, msg.into())
}

unsafe fn model_ref<'a>(m: *const TlModel) -> Result<&'a CumulantModel, (TlStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn write<T>(out: *mut T, v: T, name: &str) -> Result<(), (TlStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

unsafe fn emit_model(out: *mut *mut TlModel, m: CumulantModel) -> Result<(), (TlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(TlModel(m)));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Gaussian model with cumulants `c1`, `c2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_model_gaussian(c1: f64, c2: f64, out: *mut *mut TlModel) -> TlStatus {
    guard(|| emit_model(out, CumulantModel::gaussian(c1, c2).map_err(lib)?))
}

/// Isotropic XY chain.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_model_xy(out: *mut *mut TlModel) -> TlStatus {
    guard(|| emit_model(out, CumulantModel::xy_isotropic()))
}

/// Ising chain in a transverse field of strength `x`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_model_itf(x: f64, out: *mut *mut TlModel) -> TlStatus {
    guard(|| emit_model(out, CumulantModel::itf(x).map_err(lib)?))
}

/// Model from a JSON spec `{"kind": ..., "params": {...}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_model_from_json(json: *const c_char, out: *mut *mut TlModel) -> TlStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (TlStatus::Parse, format!("json is not UTF-8: {e}")))?;
        emit_model(out, CumulantModel::from_json(text).map_err(lib)?)
    })
}

/// # Safety
/// `model` must be NULL or a handle from a `tl_model_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_model_free(model: *mut TlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Per-site cumulants `c_1..c_k` into `out[0..k]`.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_model_cumulants(model: *const TlModel, k: usize, out: *mut f64) -> TlStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = m.cumulants(k).map_err(lib)?;
        ptr::copy_nonoverlapping(c.as_ptr(), out, k.min(c.len()));
        Ok(())
    })
}

/// `α(s)` and `β²(s)` at one point with default solver settings.
///
/// # Safety
/// `model` must be a live handle; `alpha` and `beta2` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tl_solve_point(
    model: *const TlModel,
    s: f64,
    alpha: *mut f64,
    beta2: *mut f64,
) -> TlStatus {
    guard(|| {
        let m = model_ref(model)?;
        if alpha.is_null() || beta2.is_null() {
            return Err(null("alpha/beta2"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("s must be positive, got {s}")));
        }
        let p = solve_point(m, s, None).map_err(lib)?;
        *alpha = p.alpha;
        *beta2 = p.beta2;
        Ok(())
    })
}

/// Solve along an increasing grid `s[0..n]`. A solve that stops early
/// still returns the curve of the points reached; see [`tl_curve_stopped`].
///
/// # Safety
/// `model` must be a live handle, `s` must hold `n` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_solve_curve(
    model: *const TlModel,
    s: *const f64,
    n: usize,
    out: *mut *mut TlCurve,
) -> TlStatus {
    guard(|| {
        let m = model_ref(model)?;
        if s.is_null() || out.is_null() {
            return Err(null("s/out"));
        }
        if n == 0 {
            return Err(invalid("empty grid"));
        }
        let grid = std::slice::from_raw_parts(s, n);
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return Err(invalid("grid must be positive and strictly increasing"));
        }
        let (curve, stopped) = solve_curve_partial(m, grid, &SolverOptions::default());
        *out = Box::into_raw(Box::new(TlCurve { curve, stopped }));
        Ok(())
    })
}

/// Number of solved points.
///
/// # Safety
/// `curve` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_curve_len(curve: *const TlCurve, len: *mut usize) -> TlStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        write(len, c.curve.points.len(), "len")
    })
}

/// Point `i` of the curve.
///
/// # Safety
/// `curve` must be a live handle; the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn tl_curve_get(
    curve: *const TlCurve,
    i: usize,
    s: *mut f64,
    alpha: *mut f64,
    beta2: *mut f64,
) -> TlStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        let p = c
            .curve
            .points
            .get(i)
            .ok_or_else(|| invalid(format!("index {i} out of range")))?;
        write(s, p.s, "s")?;
        write(alpha, p.alpha, "alpha")?;
        write(beta2, p.beta2, "beta2")
    })
}

/// Status of the failure that ended the solve early, `Ok` if it reached
/// the end of the grid; the message goes to [`tl_last_error_message`].
///
/// # Safety
/// `curve` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_curve_stopped(curve: *const TlCurve) -> TlStatus {
    let Some(c) = curve.as_ref() else {
        set_error("curve is null".into());
        return TlStatus::NullPointer;
    };
    match &c.stopped {
        None => TlStatus::Ok,
        Some(e) => {
            set_error(e.to_string());
            status_of(e)
        }
    }
}

/// Ground-state energy density estimate from the lower envelope.
///
/// # Safety
/// `curve` must be a live handle and `eps0` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_curve_ground_energy(curve: *const TlCurve, eps0: *mut f64) -> TlStatus {
    guard(|| {
        let c = curve.as_ref().ok_or_else(|| null("curve"))?;
        if c.curve.points.is_empty() {
            return Err(invalid("curve has no points"));
        }
        write(eps0, gse_bounds(&c.curve).eps0_estimate(), "eps0")
    })
}

/// # Safety
/// `curve` must be NULL or a handle from [`tl_solve_curve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_curve_free(curve: *mut TlCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Taylor coefficients `a_0..a_{n_max}`, `b_0..b_{n_max}` of `α(s) − c₁`
/// and `β²(s)` in powers `s^{n+1}`.
///
/// # Safety
/// `model` must be a live handle; `a` and `b` must hold `n_max + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_series(model: *const TlModel, n_max: usize, a: *mut f64, b: *mut f64) -> TlStatus {
    guard(|| {
        let m = model_ref(model)?;
        if a.is_null() || b.is_null() {
            return Err(null("a/b"));
        }
        let c = m.cumulants(2 * n_max + 3).map_err(lib)?;
        let s = lanczos_taylor_f64(&c, n_max).map_err(lib)?;
        ptr::copy_nonoverlapping(s.a.as_ptr(), a, n_max + 1);
        ptr::copy_nonoverlapping(s.b.as_ptr(), b, n_max + 1);
        Ok(())
    })
}

/// Per-site logarithm of the ground-state overlap.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tl_overlap(model: *const TlModel, out: *mut f64) -> TlStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, overlap_integral(m).map_err(lib)?, "out")
    })
}

/// Continued fraction `R(ε)` of depth `n` for real `ε` off the support.
///
/// # Safety
/// `alpha` and `beta2` must hold `n` doubles (`beta2[0]` is the total mass).
#[no_mangle]
pub unsafe extern "C" fn tl_continued_fraction(
    alpha: *const f64,
    beta2: *const f64,
    n: usize,
    eps: f64,
    out: *mut f64,
) -> TlStatus {
    guard(|| {
        if alpha.is_null() || beta2.is_null() {
            return Err(null("alpha/beta2"));
        }
        let a = std::slice::from_raw_parts(alpha, n);
        let b = std::slice::from_raw_parts(beta2, n);
        write(out, cf_eval(a, b, &eps, n).map_err(lib)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_unwraps_location() {
        let e = Error::Convergence {
            what: "x".into(),
            iterations: 1,
            residual: 1.0,
            best: None,
        };
        let at = Error::AtS { s: 0.5, source: Box::new(e) };
        assert_eq!(status_of(&at), TlStatus::Convergence);
    }

    #[test]
    fn panics_are_contained() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, TlStatus::Panic);
        let msg = unsafe { CStr::from_ptr(tl_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
    }
}
