use std::ffi::CStr;
use std::ptr;

use dosx_ffi::*;

const L: f64 = 4.0;
const P_MAX: f64 = 3.0;

fn model(dist: DosxDistribution) -> *mut DosxModel {
    let mut m = ptr::null_mut();
    let st = unsafe { dosx_model_new(L, 1, P_MAX, 1.0, dist, 0.0, &mut m) };
    assert_eq!(st, DosxStatus::Ok);
    assert!(!m.is_null());
    m
}

fn term(i: i32) -> DosxTerm {
    DosxTerm { idx: [i, 0, 0], re: 1.0, im: 0.0 }
}

fn last_error() -> String {
    let p = dosx_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn free(nu: f64, z_re: f64, z_im: f64) -> (f64, f64) {
    let (a, b) = (nu - z_re, -z_im);
    let d = a * a + b * b;
    (a / d, -b / d)
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(dosx_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn basis_len_counts_cube_points() {
    let m = model(DosxDistribution::Rademacher);
    assert_eq!(unsafe { dosx_model_basis_len(m) }, 25);
    assert_eq!(unsafe { dosx_model_basis_len(ptr::null()) }, 0);
    unsafe { dosx_model_free(m) };
}

#[test]
fn zeroth_coefficient_is_free_resolvent() {
    let m = model(DosxDistribution::Rademacher);
    let psi = [term(2)];
    let mut out = DosxValue::default();
    let st = unsafe { dosx_t_coeff_det(m, 0, 1.0, 0.5, psi.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::Ok);
    let nu = 0.5 * (2.0 / L) * (2.0 / L);
    let (re, im) = free(nu, 1.0, 0.5);
    assert!((out.re - re).abs() < 1e-12 && (out.im - im).abs() < 1e-12);
    unsafe { dosx_model_free(m) };
}

#[test]
fn odd_coefficient_vanishes_for_symmetric_law() {
    let m = model(DosxDistribution::Rademacher);
    let psi = [term(0)];
    let mut out = DosxValue::default();
    let st = unsafe { dosx_s_coeff(m, 1, 1.0, 0.5, 0.25, psi.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::Ok);
    assert!(out.re.abs() < 1e-12 && out.im.abs() < 1e-12);
    unsafe { dosx_model_free(m) };
}

#[test]
fn oracle_at_zero_coupling_is_free() {
    let m = model(DosxDistribution::UniformZeroOne);
    let psi = [term(1)];
    let mut out = DosxValue::default();
    let st = unsafe { dosx_expect_resolvent(m, 0.0, 1.0, 0.5, psi.as_ptr(), 1, psi.as_ptr(), 1, 4, 7, &mut out) };
    assert_eq!(st, DosxStatus::Ok);
    let (re, im) = free(0.5 / (L * L), 1.0, 0.5);
    assert!((out.re - re).abs() < 1e-10 && (out.im - im).abs() < 1e-10);
    assert!(out.stderr < 1e-10);
    unsafe { dosx_model_free(m) };
}

#[test]
fn density_at_zero_coupling_is_lorentzian_sum() {
    let m = model(DosxDistribution::UniformZeroOne);
    let mut out = DosxValue::default();
    let st = unsafe { dosx_dos_direct(m, 1.0, 0.5, 0.0, 4, 7, &mut out) };
    assert_eq!(st, DosxStatus::Ok);
    let want: f64 = (-12..=12)
        .map(|k| {
            let x = 0.5 * (f64::from(k) / L).powi(2) - 1.0;
            0.5 / (x * x + 0.25)
        })
        .sum::<f64>()
        / L;
    assert!((out.re - want).abs() < 1e-10, "{} vs {want}", out.re);
    unsafe { dosx_model_free(m) };
}

#[test]
fn null_pointers_are_reported() {
    let st = unsafe { dosx_model_new(L, 1, P_MAX, 1.0, DosxDistribution::Rademacher, 0.0, ptr::null_mut()) };
    assert_eq!(st, DosxStatus::NullPointer);
    let psi = [term(0)];
    let mut out = DosxValue::default();
    let st = unsafe { dosx_t_coeff_det(ptr::null(), 0, 1.0, 0.5, psi.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::NullPointer);
    assert!(last_error().contains("model"));
    let m = model(DosxDistribution::Rademacher);
    let st = unsafe { dosx_t_coeff_det(m, 0, 1.0, 0.5, ptr::null(), 0, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::NullPointer);
    assert!(last_error().contains("psi1"));
    unsafe { dosx_model_free(m) };
    unsafe { dosx_model_free(ptr::null_mut()) };
}

#[test]
fn invalid_arguments_map_to_codes() {
    let mut m = ptr::null_mut();
    let st = unsafe { dosx_model_new(-1.0, 1, P_MAX, 1.0, DosxDistribution::Rademacher, 0.0, &mut m) };
    assert_eq!(st, DosxStatus::InvalidArgument);
    assert!(m.is_null());

    let m = model(DosxDistribution::Rademacher);
    let psi = [term(0)];
    let mut out = DosxValue::default();
    let st = unsafe { dosx_s_coeff(m, 0, 1.0, -0.5, 0.25, psi.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::InvalidArgument);
    assert!(last_error().contains("eta"));

    let outside = [term(99)];
    let st = unsafe { dosx_t_coeff_det(m, 0, 1.0, 0.5, outside.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::OutsideBasis);

    let st = unsafe { dosx_t_coeff_det(m, 0, 0.0, 0.0, psi.as_ptr(), 1, psi.as_ptr(), 1, &mut out) };
    assert_eq!(st, DosxStatus::Domain);
    unsafe { dosx_model_free(m) };
}

#[test]
fn header_declares_api_and_compiles() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dosx.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "dosx_version",
        "dosx_last_error_message",
        "dosx_model_new",
        "dosx_model_free",
        "dosx_t_coeff_det",
        "dosx_s_coeff",
        "dosx_expect_resolvent",
        "dosx_dos_direct",
        "DOSX_STATUS_OK = 0",
        "typedef struct DosxModel DosxModel;",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
        .expect("C compiler");
    assert!(status.success());
}
