//! C ABI over `dosx-core`. Models are opaque handles; every fallible call
//! returns a [`DosxStatus`] and leaves a message for
//! [`dosx_last_error_message`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use dosx_core::disorder::WeightDistribution;
use dosx_core::dos::{dos_direct, DosRequest};
use dosx_core::expansion::{s_coeff, t_coeff_det, Method, SpectralWindow};
use dosx_core::lattice::{BoxSpec, Momentum, WaveVector};
use dosx_core::oracle::expect_resolvent;
use dosx_core::profile::Profile;
use dosx_core::Error;

/// Status codes; `DOSX_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DosxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    SizeLimit = 4,
    OutsideBasis = 5,
    Numerical = 6,
    Unsupported = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DosxDistribution {
    Constant = 0,
    UniformZeroOne = 1,
    Rademacher = 2,
}

/// One plane-wave component `c φ_p` with `p = idx / L`; unused axes are zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DosxTerm {
    pub idx: [i32; 3],
    pub re: f64,
    pub im: f64,
}

/// A value with its standard error (zero for exact evaluations) and its
/// numerical error budget.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DosxValue {
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
    pub numerical_error: f64,
}

/// Box, profile and weight law.
pub struct DosxModel {
    bx: BoxSpec,
    profile: Profile,
    dist: WeightDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DosxStatus {
    match e {
        Error::InvalidBox(_) | Error::InvalidParameter { .. } => DosxStatus::InvalidArgument,
        Error::Domain { .. } => DosxStatus::Domain,
        Error::SizeLimit { .. } => DosxStatus::SizeLimit,
        Error::OutsideBasis { .. } => DosxStatus::OutsideBasis,
        Error::UnsupportedDistribution(_) => DosxStatus::Unsupported,
        Error::Quadrature { .. }
        | Error::CutoffInsufficient { .. }
        | Error::Solver { .. }
        | Error::Eigen(_)
        | Error::BoundViolated { .. } => DosxStatus::Numerical,
    }
}

fn guard<F: FnOnce() -> Result<(), (DosxStatus, String)>>(f: F) -> DosxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DosxStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DosxStatus::Panic
        }
    }
}

fn core<T>(r: dosx_core::Result<T>) -> Result<T, (DosxStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DosxStatus, String) {
    (DosxStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn model_ref<'a>(m: *const DosxModel) -> Result<&'a DosxModel, (DosxStatus, String)> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn wave(model: &DosxModel, terms: *const DosxTerm, len: usize, name: &str) -> Result<WaveVector, (DosxStatus, String)> {
    if terms.is_null() {
        return Err(null(name));
    }
    let d = model.bx.dim();
    let mut psi = WaveVector::new();
    for t in std::slice::from_raw_parts(terms, len) {
        psi.insert(Momentum::new(&t.idx[..d]), Complex64::new(t.re, t.im));
    }
    core(psi.check_in(&model.bx))?;
    Ok(psi)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), (DosxStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dosx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dosx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Creates a model. `param` is the value of the constant law and is ignored
/// otherwise. On success `*out` owns a handle to release with
/// [`dosx_model_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dosx_model_new(
    side: f64,
    dim: u32,
    p_max: f64,
    width: f64,
    distribution: DosxDistribution,
    param: f64,
    out: *mut *mut DosxModel,
) -> DosxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let bx = core(BoxSpec::new(side, dim as usize, p_max))?;
        let profile = core(Profile::gaussian(width))?;
        let dist = match distribution {
            DosxDistribution::Constant => WeightDistribution::Constant { c: param },
            DosxDistribution::UniformZeroOne => WeightDistribution::UniformZeroOne,
            DosxDistribution::Rademacher => WeightDistribution::Rademacher,
        };
        out.write(Box::into_raw(Box::new(DosxModel { bx, profile, dist })));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`dosx_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dosx_model_free(model: *mut DosxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of plane waves in the model's truncated basis.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dosx_model_basis_len(model: *const DosxModel) -> usize {
    model.as_ref().map_or(0, |m| m.bx.len())
}

/// Exact `T_n(z)[ψ_1, ψ_2]`.
///
/// # Safety
/// `model` must be live; `psi1`/`psi2` must point to `len1`/`len2` terms;
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dosx_t_coeff_det(
    model: *const DosxModel,
    n: u32,
    z_re: f64,
    z_im: f64,
    psi1: *const DosxTerm,
    len1: usize,
    psi2: *const DosxTerm,
    len2: usize,
    out: *mut DosxValue,
) -> DosxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let (a, b) = (wave(m, psi1, len1, "psi1")?, wave(m, psi2, len2, "psi2")?);
        let t = core(t_coeff_det(n as usize, &m.bx, &m.profile, &m.dist, Complex64::new(z_re, z_im), &a, &b))?;
        write(out, DosxValue { re: t.value.re, im: t.value.im, stderr: 0.0, numerical_error: 0.0 })
    })
}

/// Smoothed coefficient `S_n` at `E + iη` with accuracy parameter `ε`, by the
/// deterministic partition sum.
///
/// # Safety
/// As for [`dosx_t_coeff_det`].
#[no_mangle]
pub unsafe extern "C" fn dosx_s_coeff(
    model: *const DosxModel,
    n: u32,
    e: f64,
    eta: f64,
    epsilon: f64,
    psi1: *const DosxTerm,
    len1: usize,
    psi2: *const DosxTerm,
    len2: usize,
    out: *mut DosxValue,
) -> DosxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let (a, b) = (wave(m, psi1, len1, "psi1")?, wave(m, psi2, len2, "psi2")?);
        let w = core(SpectralWindow::new(e, eta, epsilon, 0.0, 0.0))?;
        let s = core(s_coeff(n as usize, &m.bx, &m.profile, &m.dist, &w, &a, &b, Method::Deterministic))?;
        write(out, DosxValue { re: s.value.re, im: s.value.im, stderr: 0.0, numerical_error: s.numerical_error })
    })
}

/// Monte Carlo `E⟨ψ_1, (H_λ - z)^{-1} ψ_2⟩` from the dense oracle.
///
/// # Safety
/// As for [`dosx_t_coeff_det`].
#[no_mangle]
pub unsafe extern "C" fn dosx_expect_resolvent(
    model: *const DosxModel,
    lambda: f64,
    z_re: f64,
    z_im: f64,
    psi1: *const DosxTerm,
    len1: usize,
    psi2: *const DosxTerm,
    len2: usize,
    samples: u64,
    seed: u64,
    out: *mut DosxValue,
) -> DosxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let (a, b) = (wave(m, psi1, len1, "psi1")?, wave(m, psi2, len2, "psi2")?);
        let z = Complex64::new(z_re, z_im);
        let v = core(expect_resolvent(&m.bx, &m.profile, &m.dist, lambda, z, &a, &b, samples, seed))?;
        write(out, DosxValue { re: v.value.re, im: v.value.im, stderr: v.stderr, numerical_error: 0.0 })
    })
}

/// Monte Carlo `L^{-d} E Tr f_{E,η}(H_λ)`; the result is in `re`.
///
/// # Safety
/// `model` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dosx_dos_direct(
    model: *const DosxModel,
    e: f64,
    eta: f64,
    lambda: f64,
    samples: u64,
    seed: u64,
    out: *mut DosxValue,
) -> DosxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let window = core(SpectralWindow::new(e, eta, 1.0, lambda, lambda.abs()))?;
        let req = DosRequest { window, kappa: m.bx.p_max(), order: 0, samples, seed };
        let d = core(dos_direct(&req, &m.bx, &m.profile, &m.dist))?;
        write(out, DosxValue { re: d.full.value, im: 0.0, stderr: d.full.stderr, numerical_error: 0.0 })
    })
}
