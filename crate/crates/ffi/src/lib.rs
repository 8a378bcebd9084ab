//! C ABI over the `macrobell` library.
//!
//! Objects cross the boundary as opaque handles (`MbPovm`, `MbPmf`) that the
//! caller releases with the matching `*_free`. Every fallible call returns an
//! [`MbStatus`]; on failure, [`mb_last_error_message`] describes the error
//! for the calling thread. Complex coefficient vectors are passed as two
//! parallel `double` arrays of real and imaginary parts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use macrobell::bell::{self, BellConfig};
use macrobell::finite::{self, DickeSuperposition, LatticePmf};
use macrobell::io;
use macrobell::operator::{AlphaMode, DerivedParams, Povm};
use macrobell::Error;
use num_complex::Complex64;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Input rejected by validation (bad POVM, unnormalized state, ...).
    InvalidInput = 3,
    /// Numeric failure during computation.
    Numerical = 4,
    /// A size cap was exceeded.
    CapExceeded = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
}

/// Centering and normalization of the collective variable.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MbParams {
    pub mu: f64,
    pub tau: f64,
    pub sigma2: f64,
    pub phi: f64,
    /// Squared width of the limit Gaussian smearing.
    pub s2: f64,
}

/// Validated single-qubit POVM.
pub struct MbPovm(Povm);

/// Probability mass function of the collective variable.
pub struct MbPmf(LatticePmf);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MbStatus {
    match e {
        Error::CapExceeded { .. } => MbStatus::CapExceeded,
        e if e.is_validation() => MbStatus::InvalidInput,
        _ => MbStatus::Numerical,
    }
}

fn fail(status: MbStatus, message: &str) -> MbStatus {
    set_error(message);
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (MbStatus, String)>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err((status, message))) => fail(status, &message),
        Err(_) => fail(MbStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (MbStatus, String) {
    (status_of(&e), format!("{}: {e}", e.kind()))
}

fn null(what: &str) -> (MbStatus, String) {
    (MbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn coeffs_from(re: *const f64, im: *const f64, len: usize) -> Result<Vec<Complex64>, (MbStatus, String)> {
    if re.is_null() {
        return Err(null("coeffs_re"));
    }
    if len == 0 {
        return Err((MbStatus::InvalidInput, "empty coefficient vector".into()));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
    Ok((0..len).map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k]))).collect())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses and validates a POVM from its JSON form. `json` may also be
/// `builtin:sx`, `builtin:sy` or `builtin:sz`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_povm_from_json(json: *const c_char, out: *mut *mut MbPovm) -> MbStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (MbStatus::InvalidUtf8, e.to_string()))?;
        let povm = if text.starts_with("builtin:") { io::load_povm(text) } else { io::povm_from_json_str(text) }
            .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MbPovm(povm)));
        Ok(())
    })
}

/// # Safety
/// `povm` must come from [`mb_povm_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mb_povm_free(povm: *mut MbPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// Number of outcomes of a POVM, or 0 for a null handle.
///
/// # Safety
/// `povm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_povm_len(povm: *const MbPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.len())
}

/// Derived parameters; `alpha_one` nonzero selects the centered (`α = 1`)
/// convention.
///
/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_derive_params(povm: *const MbPovm, alpha_one: i32, out: *mut MbParams) -> MbStatus {
    guard(|| {
        let povm = povm.as_ref().ok_or_else(|| null("povm"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mode = if alpha_one != 0 { AlphaMode::One } else { AlphaMode::Half };
        let p = DerivedParams::derive(&povm.0, mode).map_err(lib_err)?;
        *out = MbParams { mu: p.mu, tau: p.tau, sigma2: p.sigma2, phi: p.phi, s2: p.s2 };
        Ok(())
    })
}

/// Sign-overlap matrix element `⟨k|sgn(x)|l⟩` between oscillator number states.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_sign_overlap(k: usize, l: usize, out: *mut f64) -> MbStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if k.max(l) >= bell::MAX_SCHMIDT_RANK * 4 {
            return Err((MbStatus::CapExceeded, format!("index {} too large", k.max(l))));
        }
        *out = bell::sign_overlap_table(k.max(l)).get(k, l);
        Ok(())
    })
}

/// CHSH value for Schmidt coefficients `c_k`, settings
/// `[φ_A, φ_A′, φ_B, φ_B′]` and optional smearing widths `[s_A, s_B]`
/// (null for sharp measurements).
///
/// # Safety
/// `coeffs_re` (and `coeffs_im` unless null) must hold `len` values,
/// `angles` four, `widths` two or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_chsh_value(
    coeffs_re: *const f64,
    coeffs_im: *const f64,
    len: usize,
    angles: *const f64,
    widths: *const f64,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let coeffs = coeffs_from(coeffs_re, coeffs_im, len)?;
        if angles.is_null() {
            return Err(null("angles"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let angles: [f64; 4] = std::slice::from_raw_parts(angles, 4).try_into().expect("four angles");
        let widths = if widths.is_null() { [0.0; 2] } else { [*widths, *widths.add(1)] };
        let config = BellConfig::new(coeffs, angles, widths).map_err(lib_err)?;
        *out = bell::chsh_value(&config);
        Ok(())
    })
}

/// Maximizes the sharp-measurement CHSH value over the settings.
///
/// # Safety
/// Coefficient arrays as in [`mb_chsh_value`]; `angles_out` must have room
/// for four values and `value_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_optimize_chsh(
    coeffs_re: *const f64,
    coeffs_im: *const f64,
    len: usize,
    angles_out: *mut f64,
    value_out: *mut f64,
) -> MbStatus {
    guard(|| {
        let coeffs = coeffs_from(coeffs_re, coeffs_im, len)?;
        if angles_out.is_null() {
            return Err(null("angles_out"));
        }
        let value_out = value_out.as_mut().ok_or_else(|| null("value_out"))?;
        let best = bell::optimize_chsh(&coeffs).map_err(lib_err)?;
        ptr::copy_nonoverlapping(best.angles.as_ptr(), angles_out, 4);
        *value_out = best.value;
        Ok(())
    })
}

/// Exact PMF of `X = Σ(a_i - μ)/(τ N^α)` for `Σ_k c_k |N, first + k⟩`,
/// with the parameters derived from the POVM in the `α = 1/2` convention.
///
/// # Safety
/// `povm` must be a live handle, coefficient arrays as in
/// [`mb_chsh_value`], and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_pmf_finite(
    povm: *const MbPovm,
    n_particles: usize,
    first: usize,
    coeffs_re: *const f64,
    coeffs_im: *const f64,
    len: usize,
    alpha: f64,
    out: *mut *mut MbPmf,
) -> MbStatus {
    guard(|| {
        let povm = povm.as_ref().ok_or_else(|| null("povm"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let coeffs = coeffs_from(coeffs_re, coeffs_im, len)?;
        let state = DickeSuperposition::with_offset(n_particles, first, coeffs).map_err(lib_err)?;
        let params = DerivedParams::derive(&povm.0, AlphaMode::Half).map_err(lib_err)?;
        let pmf = finite::pmf_finite(&state, &povm.0, &params, alpha).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MbPmf(pmf)));
        Ok(())
    })
}

/// # Safety
/// `pmf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_pmf_len(pmf: *const MbPmf) -> usize {
    pmf.as_ref().map_or(0, |p| p.0.values.len())
}

/// Support points, increasing. Valid while the handle lives.
///
/// # Safety
/// `pmf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_pmf_values(pmf: *const MbPmf) -> *const f64 {
    pmf.as_ref().map_or(ptr::null(), |p| p.0.values.as_ptr())
}

/// Probabilities matching [`mb_pmf_values`].
///
/// # Safety
/// `pmf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_pmf_probs(pmf: *const MbPmf) -> *const f64 {
    pmf.as_ref().map_or(ptr::null(), |p| p.0.probs.as_ptr())
}

/// # Safety
/// `pmf` must come from [`mb_pmf_finite`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mb_pmf_free(pmf: *mut MbPmf) {
    if !pmf.is_null() {
        drop(Box::from_raw(pmf));
    }
}
