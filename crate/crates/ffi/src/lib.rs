//! C ABI over the brownscope library.
//!
//! Measures are opaque handles created from JSON and released with
//! `bs_measure_free`. Every fallible call returns a `BsStatus`; on failure
//! the message is kept per thread and can be read with
//! `bs_last_error_message`. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use brownscope::hj_additive::{lifetime_additive, phi_map};
use brownscope::hj_multiplicative::{lifetime_mult_positive, lifetime_mult_unitary, psi_map};
use brownscope::rdiagonal::{circ_inner_radius, hl_radii};
use brownscope::region::{evaluate_grid, Bounds};
use brownscope::{Error, ModelParams, SpectralMeasure, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, bad parameters, or an unsupported request.
    InvalidInput = 3,
    EvaluationOnSupport = 4,
    WrongSupportKind = 5,
    /// The point is not strictly outside the closed domain.
    InsideDomain = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<BsComplex> for C64 {
    fn from(z: BsComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<C64> for BsComplex {
    fn from(z: C64) -> Self {
        BsComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BsAnnulus {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

/// Which lifetime function `bs_lifetime_grid` evaluates.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsModel {
    Additive = 0,
    MultUnitary = 1,
    MultPositive = 2,
}

/// Opaque spectral measure.
pub struct BsMeasure {
    inner: SpectralMeasure,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BsStatus {
    match e {
        Error::EvaluationOnSupport { .. } => BsStatus::EvaluationOnSupport,
        Error::WrongSupportKind { .. } => BsStatus::WrongSupportKind,
        Error::InsideDomain { .. } => BsStatus::InsideDomain,
        Error::BoundaryMap { source, .. } => status_of(source),
        e if e.is_config_error() => BsStatus::InvalidInput,
        _ => BsStatus::Numerical,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard<F>(f: F) -> BsStatus
where
    F: FnOnce() -> Result<(), BsStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside brownscope".into());
            BsStatus::Panic
        }
    }
}

fn lib<T>(r: brownscope::Result<T>) -> Result<T, BsStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> BsStatus {
    set_error(format!("{what} is null"));
    BsStatus::NullPointer
}

unsafe fn measure_ref<'a>(m: *const BsMeasure) -> Result<&'a SpectralMeasure, BsStatus> {
    // SAFETY: the caller passes a handle from bs_measure_from_json or null
    unsafe { m.as_ref() }.map(|m| &m.inner).ok_or_else(|| null("measure"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), BsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and, per the contract, valid for writes
    unsafe { out.write(value) };
    Ok(())
}

/// Parse a measure document (`{"kind": "atomic", "support": ..., "atoms": ...}`
/// or a density grid) and return a new handle in `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_from_json(json: *const c_char, out: *mut *mut BsMeasure) -> BsStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        // SAFETY: NUL-terminated per the contract
        let text = unsafe { CStr::from_ptr(json) }.to_str().map_err(|_| {
            set_error("json is not valid UTF-8".into());
            BsStatus::InvalidUtf8
        })?;
        let inner = lib(SpectralMeasure::from_json_str(text))?;
        unsafe { write(out, Box::into_raw(Box::new(BsMeasure { inner }))) }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `m` must come from `bs_measure_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_free(m: *mut BsMeasure) {
    if !m.is_null() {
        // SAFETY: created by Box::into_raw in bs_measure_from_json
        drop(unsafe { Box::from_raw(m) });
    }
}

/// `G(z) = ∫ 1/(z − ξ) dμ(ξ)`.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_cauchy_transform(m: *const BsMeasure, z: BsComplex, out: *mut BsComplex) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let g = lib(mu.cauchy_transform(z.into()))?;
        unsafe { write(out, g.into()) }
    })
}

/// `J(λ) = ½ − λ G(λ)`.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_herglotz(m: *const BsMeasure, lambda: BsComplex, out: *mut BsComplex) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let j = lib(mu.herglotz(lambda.into()))?;
        unsafe { write(out, j.into()) }
    })
}

/// `∫ |ξ − λ|⁻² dμ(ξ)`; `+inf` when divergent.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_neg2_trace(m: *const BsMeasure, lambda: BsComplex, out: *mut f64) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        unsafe { write(out, mu.neg2_trace(lambda.into())) }
    })
}

fn lifetime(model: BsModel, mu: &SpectralMeasure, lambda: C64) -> brownscope::Result<f64> {
    match model {
        BsModel::Additive => Ok(lifetime_additive(mu, lambda)),
        BsModel::MultUnitary => lifetime_mult_unitary(mu, lambda),
        BsModel::MultPositive => lifetime_mult_positive(mu, lambda),
    }
}

/// Lifetime `T(λ)` of the chosen model.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_lifetime(m: *const BsMeasure, model: BsModel, lambda: BsComplex, out: *mut f64) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let v = lib(lifetime(model, mu, lambda.into()))?;
        unsafe { write(out, v) }
    })
}

/// Lifetime at the `nx × ny` cell centers of `[re_min, re_max] × [im_min, im_max]`,
/// row-major with row 0 at the smallest imaginary part. Points where the
/// lifetime is undefined (the origin in the positive case) get NaN.
///
/// # Safety
/// `m` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn bs_lifetime_grid(
    m: *const BsMeasure,
    model: BsModel,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
    values: *mut f64,
    len: usize,
) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        if values.is_null() {
            return Err(null("values"));
        }
        let need = nx.checked_mul(ny).ok_or(BsStatus::InvalidInput)?;
        if len < need {
            set_error(format!("buffer holds {len} values, grid needs {need}"));
            return Err(BsStatus::BufferTooSmall);
        }
        // surface a wrong support kind before filling the grid with NaN
        lib(lifetime(model, mu, C64::new(re_max + 1.0, im_max + 1.0)))?;
        let bounds = lib(Bounds::new(re_min, re_max, im_min, im_max))?;
        let grid = lib(evaluate_grid(|z| lifetime(model, mu, z).unwrap_or(f64::NAN), bounds, nx, ny))?;
        // SAFETY: checked non-null with room for `need` values
        let dst = unsafe { std::slice::from_raw_parts_mut(values, need) };
        dst.copy_from_slice(&grid.values);
        Ok(())
    })
}

fn params(t: f64, gamma: BsComplex) -> Result<ModelParams, BsStatus> {
    lib(ModelParams::new(t, gamma.into()))
}

/// `Φ_{t,γ}(λ) = λ + γ G(λ)` for `λ` strictly outside the closed domain.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_phi_map(m: *const BsMeasure, t: f64, gamma: BsComplex, lambda: BsComplex, out: *mut BsComplex) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let w = lib(phi_map(mu, &params(t, gamma)?, lambda.into()))?;
        unsafe { write(out, w.into()) }
    })
}

/// `Ψ_{t,γ}(λ) = λ exp(γ J(λ))` for a law on the unit circle.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_psi_map(m: *const BsMeasure, t: f64, gamma: BsComplex, lambda: BsComplex, out: *mut BsComplex) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let w = lib(psi_map(mu, &params(t, gamma)?, lambda.into()))?;
        unsafe { write(out, w.into()) }
    })
}

/// Inner and outer radius of the annulus for a law on the half-line.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_hl_radii(m: *const BsMeasure, out: *mut BsAnnulus) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let a = lib(hl_radii(mu))?;
        unsafe {
            write(
                out,
                BsAnnulus {
                    inner_radius: a.inner_radius,
                    outer_radius: a.outer_radius,
                },
            )
        }
    })
}

/// Inner radius after adding circular noise of variance `t`.
///
/// # Safety
/// `m` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bs_circ_inner_radius(m: *const BsMeasure, t: f64, out: *mut f64) -> BsStatus {
    guard(|| {
        let mu = unsafe { measure_ref(m) }?;
        let r = lib(circ_inner_radius(mu, t))?;
        unsafe { write(out, r) }
    })
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit). Returns the buffer size needed for the full message.
///
/// # Safety
/// `buf` must be valid for `len` writes, or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn bs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: buf has room for len bytes and n < len
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                buf.add(n).write(0);
            }
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
