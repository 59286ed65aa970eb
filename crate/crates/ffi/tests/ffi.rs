use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use brownscope_ffi::*;

fn measure(json: &str) -> *mut BsMeasure {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bs_measure_from_json(text.as_ptr(), &mut m) }, BsStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let need = unsafe { bs_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; need];
    unsafe { bs_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

const BERNOULLI: &str = r#"{"kind": "atomic", "support": "real", "atoms": [[-1, 0, 0.5], [1, 0, 0.5]]}"#;
const DELTA1: &str = r#"{"kind": "atomic", "support": "circle", "atoms": [[1, 0, 1]]}"#;
const TWO_ATOMS: &str = r#"{"kind": "atomic", "support": "nonneg", "atoms": [[1, 0, 0.5], [2, 0, 0.5]]}"#;

fn z(re: f64, im: f64) -> BsComplex {
    BsComplex { re, im }
}

#[test]
fn transforms_and_lifetimes() {
    let b = measure(BERNOULLI);
    let mut g = BsComplex::default();
    assert_eq!(unsafe { bs_cauchy_transform(b, z(0.0, 2.0), &mut g) }, BsStatus::Ok);
    assert!((g.re).abs() < 1e-15 && (g.im + 0.4).abs() < 1e-15);
    let mut t = 0.0;
    assert_eq!(unsafe { bs_lifetime(b, BsModel::Additive, z(2.0, 0.0), &mut t) }, BsStatus::Ok);
    assert!((t - 1.8).abs() < 1e-12);
    assert_eq!(unsafe { bs_neg2_trace(b, z(1.0, 0.0), &mut t) }, BsStatus::Ok);
    assert_eq!(t, f64::INFINITY);
    let mut w = BsComplex::default();
    assert_eq!(unsafe { bs_phi_map(b, 1.0, z(1.0, 0.0), z(0.0, 2.0), &mut w) }, BsStatus::Ok);
    assert!((w.im - 1.6).abs() < 1e-14);
    assert_eq!(unsafe { bs_phi_map(b, 1.0, z(1.0, 0.0), z(0.9, 0.0), &mut w) }, BsStatus::InsideDomain);
    assert!(!last_error().is_empty());
    unsafe { bs_measure_free(b) };

    let d = measure(DELTA1);
    assert_eq!(unsafe { bs_lifetime(d, BsModel::MultUnitary, z(-1.0, 0.0), &mut t) }, BsStatus::Ok);
    assert!((t - 4.0).abs() < 1e-14);
    assert_eq!(unsafe { bs_psi_map(d, 0.3, z(0.3, 0.0), z(2.0, 0.0), &mut w) }, BsStatus::Ok);
    assert!((w.re - 2.0 * (-0.45f64).exp()).abs() < 1e-14);
    assert_eq!(unsafe { bs_lifetime(d, BsModel::MultPositive, z(2.0, 0.0), &mut t) }, BsStatus::WrongSupportKind);
    unsafe { bs_measure_free(d) };
}

#[test]
fn radii() {
    let h = measure(TWO_ATOMS);
    let mut a = BsAnnulus::default();
    assert_eq!(unsafe { bs_hl_radii(h, &mut a) }, BsStatus::Ok);
    assert!((a.inner_radius - 1.6f64.sqrt()).abs() < 1e-14);
    assert!((a.outer_radius - 2.5f64.sqrt()).abs() < 1e-14);
    let mut r = 0.0;
    assert_eq!(unsafe { bs_circ_inner_radius(h, 0.5, &mut r) }, BsStatus::Ok);
    assert!((r - 1.1f64.sqrt()).abs() < 1e-14);
    assert_eq!(unsafe { bs_circ_inner_radius(h, 1.7, &mut r) }, BsStatus::InvalidInput);
    assert!(last_error().contains("1.6"));
    unsafe { bs_measure_free(h) };
}

#[test]
fn lifetime_grid_fills_buffer() {
    let b = measure(BERNOULLI);
    let mut values = vec![0.0; 9];
    let s = unsafe { bs_lifetime_grid(b, BsModel::Additive, -1.5, 1.5, -1.5, 1.5, 3, 3, values.as_mut_ptr(), values.len()) };
    assert_eq!(s, BsStatus::Ok);
    // center node is the origin, T(0) = 1
    assert!((values[4] - 1.0).abs() < 1e-12);
    let s = unsafe { bs_lifetime_grid(b, BsModel::Additive, -1.5, 1.5, -1.5, 1.5, 4, 4, values.as_mut_ptr(), values.len()) };
    assert_eq!(s, BsStatus::BufferTooSmall);
    let s = unsafe { bs_lifetime_grid(b, BsModel::MultUnitary, -1.5, 1.5, -1.5, 1.5, 3, 3, values.as_mut_ptr(), values.len()) };
    assert_eq!(s, BsStatus::WrongSupportKind);
    unsafe { bs_measure_free(b) };
}

#[test]
fn bad_input_is_reported() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bs_measure_from_json(ptr::null(), &mut m) }, BsStatus::NullPointer);
    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { bs_measure_from_json(bad.as_ptr(), &mut m) }, BsStatus::InvalidInput);
    assert!(m.is_null());
    let invalid = [0xffu8 as c_char, 0];
    assert_eq!(unsafe { bs_measure_from_json(invalid.as_ptr(), &mut m) }, BsStatus::InvalidUtf8);
    let mut out = BsComplex::default();
    assert_eq!(unsafe { bs_cauchy_transform(ptr::null(), z(0.0, 1.0), &mut out) }, BsStatus::NullPointer);
    let b = measure(BERNOULLI);
    assert_eq!(unsafe { bs_cauchy_transform(b, z(1.0, 0.0), &mut out) }, BsStatus::EvaluationOnSupport);
    assert_eq!(unsafe { bs_cauchy_transform(b, z(0.0, 1.0), ptr::null_mut()) }, BsStatus::NullPointer);
    unsafe { bs_measure_free(b) };
    unsafe { bs_measure_free(ptr::null_mut()) };
}

#[test]
fn error_message_truncates() {
    let b = measure(BERNOULLI);
    let mut out = BsComplex::default();
    unsafe { bs_cauchy_transform(b, z(1.0, 0.0), &mut out) };
    let full = last_error();
    let mut small = [1 as c_char; 5];
    let need = unsafe { bs_last_error_message(small.as_mut_ptr(), small.len()) };
    assert_eq!(need, full.len() + 1);
    assert_eq!(small[4], 0);
    unsafe { bs_measure_free(b) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/brownscope.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header_path()).unwrap();
    for name in [
        "bs_measure_from_json",
        "bs_measure_free",
        "bs_cauchy_transform",
        "bs_herglotz",
        "bs_neg2_trace",
        "bs_lifetime",
        "bs_lifetime_grid",
        "bs_phi_map",
        "bs_psi_map",
        "bs_hl_radii",
        "bs_circ_inner_radius",
        "bs_last_error_message",
        "bs_version",
        "BS_STATUS_OK",
        "BS_STATUS_INSIDE_DOMAIN",
        "typedef struct BsMeasure BsMeasure",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = std::env::temp_dir().join(format!("bs-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"brownscope.h\"\nint main(void) { BsComplex z = {0.0, 1.0}; BsStatus s = BS_STATUS_OK; (void)z; return (int)s; }\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header_path().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
