//! C ABI over `pdtrim`.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`PdtrimStatus`]; on failure the message is
//! available from [`pdtrim_last_error`] on the same thread until the next
//! failing call. Panics are caught at the boundary and reported as
//! [`PdtrimStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pdtrim::densities::{k_n, GrFamily};
use pdtrim::fit::{select_r, RankedData};
use pdtrim::levy::{normalized_exponent_real, sample_ordered_jumps, sample_pd, StableParams};
use pdtrim::rng::{Rng, Stream};
use pdtrim::verify::{verify_all, Suite, VerifyConfig};
use pdtrim::PdError;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdtrimStatus {
    Ok = 0,
    /// An argument is outside the domain of the operation.
    Domain = 1,
    /// Too few jumps were enumerated for the request.
    InsufficientEnumeration = 2,
    /// A density was evaluated outside its validated range.
    Range = 3,
    /// A numerical method did not meet its tolerance.
    Numeric = 4,
    /// An internal consistency check failed.
    Consistency = 5,
    /// The fitter could not fit the data.
    FitFailure = 6,
    /// A required pointer argument was null.
    NullPointer = 7,
    /// A string argument was not valid UTF-8.
    InvalidString = 8,
    /// The library panicked; this is a bug.
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &PdError) -> PdtrimStatus {
    match e {
        PdError::Domain(_) => PdtrimStatus::Domain,
        PdError::InsufficientEnumeration { .. } => PdtrimStatus::InsufficientEnumeration,
        PdError::Range { .. } => PdtrimStatus::Range,
        PdError::Numeric(_) => PdtrimStatus::Numeric,
        PdError::Consistency(_) => PdtrimStatus::Consistency,
        PdError::FitFailure(_) => PdtrimStatus::FitFailure,
    }
}

enum Fail {
    Lib(PdError),
    Null(&'static str),
    Utf8,
}

impl From<PdError> for Fail {
    fn from(e: PdError) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PdtrimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdtrimStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            PdtrimStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8".into());
            PdtrimStatus::InvalidString
        }
        Err(_) => {
            set_error("panic inside pdtrim".into());
            PdtrimStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either null or a pointer valid for writes of T.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

fn out_slice<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and, by contract, valid for `len` writes.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pdtrim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdtrim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Seeded random stream.
pub struct PdtrimRng {
    rng: Rng,
}

/// A stream derived from `seed`; free with [`pdtrim_rng_free`].
#[no_mangle]
pub extern "C" fn pdtrim_rng_new(seed: u64) -> *mut PdtrimRng {
    Box::into_raw(Box::new(PdtrimRng { rng: Stream::new(seed).rng() }))
}

/// # Safety
/// `rng` must come from [`pdtrim_rng_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_rng_free(rng: *mut PdtrimRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Writes one `PD_α^{(r)}` draw: `depth` values into `values` and the
/// remaining mass into `tail_fraction`. Jumps are enumerated down to `eps`
/// times the `r`-th largest.
///
/// # Safety
/// `rng` must be a live handle; `values` must hold `depth` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_sample_pd(
    rng: *mut PdtrimRng,
    alpha: f64,
    r: usize,
    depth: usize,
    eps: f64,
    values: *mut f64,
    tail_fraction: *mut f64,
) -> PdtrimStatus {
    guard(|| {
        let rng = out(rng, "rng")?;
        let params = StableParams::new(alpha, 1.0)?;
        let s = sample_pd(&params, r, depth, eps, &mut rng.rng)?;
        out_slice(values, depth, "values")?.copy_from_slice(&s.values);
        *out(tail_fraction, "tail_fraction")? = s.tail_fraction;
        Ok(())
    })
}

/// Writes the `n_points` largest jumps on `[0, t]` of the subordinator with
/// Lévy tail `c x^{-α}`, in decreasing order.
///
/// # Safety
/// `rng` must be a live handle; `jumps` must hold `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_sample_jumps(
    rng: *mut PdtrimRng,
    alpha: f64,
    c: f64,
    t: f64,
    n_points: usize,
    jumps: *mut f64,
) -> PdtrimStatus {
    guard(|| {
        let rng = out(rng, "rng")?;
        let params = StableParams::new(alpha, c)?;
        let js = sample_ordered_jumps(&params, t, n_points, &mut rng.rng)?;
        out_slice(jumps, n_points, "jumps")?.copy_from_slice(&js.jumps);
        Ok(())
    })
}

/// The densities `g_r, …, g_{r+count-1}` of the trimmed total.
pub struct PdtrimDensity {
    family: GrFamily,
}

/// Builds and self-checks the density family.
///
/// # Safety
/// `handle` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_density_new(alpha: f64, r: f64, count: usize, handle: *mut *mut PdtrimDensity) -> PdtrimStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let family = GrFamily::new(alpha, r, count)?;
        *h = Box::into_raw(Box::new(PdtrimDensity { family }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`pdtrim_density_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_density_free(handle: *mut PdtrimDensity) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `g_{r+k}(t)`; [`PdtrimStatus::Range`] outside the validated range.
///
/// # Safety
/// `handle` must be live; `value` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_density_eval(handle: *const PdtrimDensity, k: usize, t: f64, value: *mut f64) -> PdtrimStatus {
    guard(|| {
        // SAFETY: live handle by contract.
        let h = unsafe { handle.as_ref() }.ok_or(Fail::Null("handle"))?;
        let v = h.family.get(k)?.eval(t)?;
        *out(value, "value")? = v;
        Ok(())
    })
}

/// Validated range `(t_min, t_max)` of `g_{r+k}`.
///
/// # Safety
/// `handle` must be live; `t_min` and `t_max` valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_density_range(handle: *const PdtrimDensity, k: usize, t_min: *mut f64, t_max: *mut f64) -> PdtrimStatus {
    guard(|| {
        // SAFETY: live handle by contract.
        let h = unsafe { handle.as_ref() }.ok_or(Fail::Null("handle"))?;
        let g = h.family.get(k)?;
        *out(t_min, "t_min")? = g.t_min;
        *out(t_max, "t_max")? = g.t_max;
        Ok(())
    })
}

/// `K_n(α)`.
///
/// # Safety
/// `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_k_n(alpha: f64, n: usize, value: *mut f64) -> PdtrimStatus {
    guard(|| {
        *out(value, "value")? = k_n(alpha, n)?;
        Ok(())
    })
}

/// `(1 + ψ̃(λ))^{-r}`, the Laplace transform of the trimmed total.
///
/// # Safety
/// `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_laplace_ratio(alpha: f64, r: f64, lambda: f64, value: *mut f64) -> PdtrimStatus {
    guard(|| {
        *out(value, "value")? = (1.0 + normalized_exponent_real(alpha, lambda)?).powf(-r);
        Ok(())
    })
}

/// Fit of `(α, r)` to `len` positive weights in any order. A negative or NaN
/// `penalty` selects the default.
///
/// # Safety
/// `weights` must hold `len` doubles; the outputs must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_fit(
    weights: *const f64,
    len: usize,
    r_max: usize,
    penalty: f64,
    r_hat: *mut usize,
    alpha_hat: *mut f64,
    residual: *mut f64,
) -> PdtrimStatus {
    guard(|| {
        if weights.is_null() {
            return Err(Fail::Null("weights"));
        }
        // SAFETY: non-null and valid for `len` reads by contract.
        let w = unsafe { std::slice::from_raw_parts(weights, len) }.to_vec();
        let data = RankedData::from_unsorted(w, "ffi")?;
        let pen = (penalty >= 0.0).then_some(penalty);
        let f = select_r(&data, r_max, pen)?;
        *out(r_hat, "r_hat")? = f.r_hat;
        *out(alpha_hat, "alpha_hat")? = f.alpha_hat;
        *out(residual, "residual")? = f.residual;
        Ok(())
    })
}

/// Runs the verification suite `suite` (a suite name or `"all"`) on the
/// default grid and writes the JSON report array to `json`, to be released
/// with [`pdtrim_string_free`]. `all_pass` receives 1 when every check passes.
///
/// # Safety
/// `suite` must be a NUL-terminated string; `json` and `all_pass` valid for
/// one write each.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_verify(
    suite: *const c_char,
    seed: u64,
    budget: usize,
    json: *mut *mut c_char,
    all_pass: *mut i32,
) -> PdtrimStatus {
    guard(|| {
        if suite.is_null() {
            return Err(Fail::Null("suite"));
        }
        // SAFETY: NUL-terminated by contract.
        let name = unsafe { CStr::from_ptr(suite) }.to_str().map_err(|_| Fail::Utf8)?;
        let mut cfg = VerifyConfig { seed, budget, ..Default::default() };
        if name != "all" {
            cfg.suites = vec![name.parse::<Suite>()?];
        }
        let reports = verify_all(&cfg)?;
        let text = serde_json::to_string(&reports).map_err(|e| PdError::Consistency(e.to_string()))?;
        *out(all_pass, "all_pass")? = reports.iter().all(|r| r.pass) as i32;
        *out(json, "json")? = CString::new(text).map_err(|e| PdError::Consistency(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pdtrim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
