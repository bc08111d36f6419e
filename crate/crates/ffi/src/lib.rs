//! C ABI over `foxh-kit`.
//!
//! Every function returns a [`FoxhStatus`] and writes its result through an
//! out pointer. On failure the message is kept per thread and can be read with
//! [`foxh_last_error_message`]. Handles are opaque and must be released with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use foxh_kit::fading::{self, AsymptoticMetric, FadingParams, Format, ModulationSpec};
use foxh_kit::fox_h::{eval_bivariate, BivariateHDescriptor};
use foxh_kit::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoxhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Structural = 4,
    EtaEqualsOne = 5,
    InvalidConstellation = 6,
    Serialization = 7,
    GammaPole = 8,
    Overflow = 9,
    NoSeparatingStrip = 10,
    NonConvergence = 11,
    ImaginaryResidue = 12,
    Divergence = 13,
    Quadrature = 14,
    Panic = 15,
}

impl From<&Error> for FoxhStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::GammaPole { .. } => FoxhStatus::GammaPole,
            Error::Overflow(_) => FoxhStatus::Overflow,
            Error::InvalidArgument(_) => FoxhStatus::InvalidArgument,
            Error::Structural(_) => FoxhStatus::Structural,
            Error::NoSeparatingStrip(_) => FoxhStatus::NoSeparatingStrip,
            Error::NonConvergence { .. } => FoxhStatus::NonConvergence,
            Error::ImaginaryResidue { .. } => FoxhStatus::ImaginaryResidue,
            Error::Divergence(_) => FoxhStatus::Divergence,
            Error::Quadrature(_) => FoxhStatus::Quadrature,
            Error::EtaEqualsOne => FoxhStatus::EtaEqualsOne,
            Error::InvalidConstellation(_) => FoxhStatus::InvalidConstellation,
            Error::Serialization(_) => FoxhStatus::Serialization,
        }
    }
}

/// Opaque channel parameters.
pub struct FoxhParams(FadingParams);

/// Opaque bivariate H-function descriptor.
pub struct FoxhDescriptor(BivariateHDescriptor);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(FoxhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(FoxhStatus::from(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> FoxhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            FoxhStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FoxhStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(FoxhStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(FoxhStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn foxh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Creates channel parameters. `format` is 1 or 2. `eta = 1` is rejected.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foxh_params_new(
    alpha: f64,
    eta: f64,
    mu: f64,
    m_s: f64,
    format: u32,
    mean_snr: f64,
    out: *mut *mut FoxhParams,
) -> FoxhStatus {
    guard(|| {
        let format = match format {
            1 => Format::I,
            2 => Format::II,
            f => return Err(Fail(FoxhStatus::InvalidArgument, format!("format must be 1 or 2, got {f}"))),
        };
        let p = FadingParams::new(alpha, eta, mu, m_s, format, mean_snr)?;
        write(out, Box::into_raw(Box::new(FoxhParams(p))))
    })
}

/// Parses parameters from JSON with the field names of the CLI params file.
/// `eta = 1` maps to the limit offset.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foxh_params_from_json(json: *const c_char, out: *mut *mut FoxhParams) -> FoxhStatus {
    guard(|| {
        let file = foxh_kit::cli::ParamsFile::from_json(text(json, "json")?)?;
        write(out, Box::into_raw(Box::new(FoxhParams(file.params))))
    })
}

/// Copy of `params` with a different average SNR (linear).
///
/// # Safety
/// `params` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_params_with_mean_snr(
    params: *const FoxhParams,
    mean_snr: f64,
    out: *mut *mut FoxhParams,
) -> FoxhStatus {
    guard(|| {
        let p = borrow(params, "params")?.0.with_mean_snr(mean_snr);
        p.validate()?;
        write(out, Box::into_raw(Box::new(FoxhParams(p))))
    })
}

/// # Safety
/// `params` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn foxh_params_free(params: *mut FoxhParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn metric<F: FnOnce(&FadingParams) -> foxh_kit::Result<f64>>(
    params: *const FoxhParams,
    out: *mut f64,
    f: F,
) -> FoxhStatus {
    guard(|| {
        let v = f(&borrow(params, "params")?.0)?;
        write(out, v)
    })
}

unsafe fn modulation(preset: *const c_char) -> Result<ModulationSpec, Fail> {
    let m = ModulationSpec::preset(text(preset, "modulation")?)?;
    m.validate()?;
    Ok(m)
}

/// Composite density at instantaneous SNR `gamma` (linear).
///
/// # Safety
/// `params` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_pdf(params: *const FoxhParams, gamma: f64, out: *mut f64) -> FoxhStatus {
    metric(params, out, |p| fading::composite_pdf(gamma, p))
}

/// Outage probability at threshold `gamma_th` (linear).
///
/// # Safety
/// `params` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_outage(params: *const FoxhParams, gamma_th: f64, out: *mut f64) -> FoxhStatus {
    metric(params, out, |p| fading::outage(p, gamma_th))
}

/// `E[γⁿ e^{−sγ}]`.
///
/// # Safety
/// `params` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_mgf(params: *const FoxhParams, n: u32, s: f64, out: *mut f64) -> FoxhStatus {
    metric(params, out, |p| fading::gen_mgf(p, n, s))
}

/// Average SEP for a modulation preset such as `bpsk`, `dbpsk` or `lmpsk8`.
///
/// # Safety
/// `preset` must be NUL-terminated; `params` must come from this library;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_sep(params: *const FoxhParams, preset: *const c_char, out: *mut f64) -> FoxhStatus {
    guard(|| {
        let m = modulation(preset)?;
        let v = fading::sep(&borrow(params, "params")?.0, &m)?;
        write(out, v)
    })
}

/// High-SNR outage approximation.
///
/// # Safety
/// `params` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_outage_asymptotic(
    params: *const FoxhParams,
    gamma_th: f64,
    out: *mut f64,
) -> FoxhStatus {
    metric(params, out, |p| fading::asymptotic(p, &AsymptoticMetric::Outage { gamma_th }))
}

/// High-SNR SEP approximation for a modulation preset.
///
/// # Safety
/// As for [`foxh_sep`].
#[no_mangle]
pub unsafe extern "C" fn foxh_sep_asymptotic(
    params: *const FoxhParams,
    preset: *const c_char,
    out: *mut f64,
) -> FoxhStatus {
    guard(|| {
        let modulation = modulation(preset)?;
        let v = fading::asymptotic(&borrow(params, "params")?.0, &AsymptoticMetric::Sep { modulation })?;
        write(out, v)
    })
}

/// Parses and validates a descriptor JSON document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_descriptor_from_json(
    json: *const c_char,
    out: *mut *mut FoxhDescriptor,
) -> FoxhStatus {
    guard(|| {
        let d = BivariateHDescriptor::from_json(text(json, "json")?)?;
        write(out, Box::into_raw(Box::new(FoxhDescriptor(d))))
    })
}

/// Serializes a descriptor. Release the string with [`foxh_string_free`].
///
/// # Safety
/// `desc` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_descriptor_to_json(desc: *const FoxhDescriptor, out: *mut *mut c_char) -> FoxhStatus {
    guard(|| {
        let s = borrow(desc, "descriptor")?.0.to_json()?;
        let c = CString::new(s).map_err(|e| Fail(FoxhStatus::Serialization, e.to_string()))?;
        write(out, c.into_raw())
    })
}

/// `H[x, y]`.
///
/// # Safety
/// `desc` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foxh_descriptor_eval(
    desc: *const FoxhDescriptor,
    x: f64,
    y: f64,
    out: *mut f64,
) -> FoxhStatus {
    guard(|| {
        let v = eval_bivariate(&borrow(desc, "descriptor")?.0, x, y)?;
        write(out, v)
    })
}

/// # Safety
/// `desc` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn foxh_descriptor_free(desc: *mut FoxhDescriptor) {
    if !desc.is_null() {
        drop(Box::from_raw(desc));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn foxh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
