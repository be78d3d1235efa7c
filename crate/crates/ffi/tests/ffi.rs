use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use socint_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(socint_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn distribution_and_table_round_trip() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(
            socint_distribution_new([0.89, 0.11].as_ptr(), 2, &mut d),
            SocintStatus::Ok
        );
        let mut h = 0.0;
        assert_eq!(socint_distribution_entropy(d, &mut h), SocintStatus::Ok);
        assert!((h - 0.346515).abs() < 1e-6);
        let mut v = 0.0;
        assert_eq!(socint_distribution_varentropy(d, &mut v), SocintStatus::Ok);
        assert!((v - 0.427940).abs() < 1e-6);

        let mut t = ptr::null_mut();
        assert_eq!(socint_table_new(d, 2, &mut t), SocintStatus::Ok);
        let mut k = 0usize;
        assert_eq!(socint_table_class_count(t, &mut k), SocintStatus::Ok);
        assert_eq!(k, 3);
        let mut log_m = 0.0;
        assert_eq!(
            socint_min_log_code_size(t, 0.01, &mut log_m),
            SocintStatus::Ok
        );
        assert!((log_m - 4f64.ln()).abs() < 1e-12);
        let mut dist = 0.0;
        assert_eq!(
            socint_extractor_distance(t, 4f64.ln(), &mut dist),
            SocintStatus::Ok
        );
        assert!((dist - 0.5421).abs() < 1e-12);
        let (mut ls, mut ld) = (0.0, 0.0);
        assert_eq!(
            socint_max_log_extractor_size(t, 0.6, &mut ls, &mut ld),
            SocintStatus::Ok
        );
        assert!(ld <= 0.6);
        let mut delta = 0.0;
        assert_eq!(socint_delta_gap(t, &mut delta), SocintStatus::Ok);
        let (mut ce, mut ed, mut dp) = (0.0, 0.0, 0.0);
        assert_eq!(
            socint_joint_pair(t, h, 0.0, &mut ce, &mut ed, &mut dp),
            SocintStatus::Ok
        );
        assert_eq!(dp, delta);
        assert!(ce + ed >= dp - 1e-12);
        socint_table_free(t);
        socint_distribution_free(d);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(
            socint_distribution_new([0.5, 0.6].as_ptr(), 2, &mut d),
            SocintStatus::InvalidArgument
        );
        assert!(d.is_null());
        assert!(last_error().contains("sum"));

        let text = CString::new("a:0.5,b:x").unwrap();
        assert_eq!(
            socint_distribution_parse(text.as_ptr(), &mut d),
            SocintStatus::ParseError
        );

        let text = CString::new("a:1/2,b:1/2").unwrap();
        assert_eq!(
            socint_distribution_parse(text.as_ptr(), &mut d),
            SocintStatus::Ok
        );
        let mut t = ptr::null_mut();
        assert_eq!(
            socint_table_new(ptr::null(), 3, &mut t),
            SocintStatus::NullPointer
        );
        assert_eq!(
            socint_table_new(d, 0, &mut t),
            SocintStatus::InvalidArgument
        );
        assert_eq!(
            socint_table_new(d, 5, ptr::null_mut()),
            SocintStatus::NullPointer
        );
        let mut x = 0.0;
        assert_eq!(
            socint_gaussian_second_order(-1.0, 0.5, &mut x),
            SocintStatus::InvalidArgument
        );
        assert_eq!(
            socint_gaussian_second_order(1.0, 0.975, &mut x),
            SocintStatus::Ok
        );
        assert!((x - 1.959964).abs() < 1e-6);
        socint_distribution_free(d);
        socint_distribution_free(ptr::null_mut());
        socint_table_free(ptr::null_mut());
        assert!(!CStr::from_ptr(socint_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/socint.h")).unwrap();
    for name in [
        "socint_distribution_new",
        "socint_table_new",
        "socint_joint_pair",
        "socint_last_error",
        "SOCINT_STATUS_NULL_POINTER",
        "typedef struct SocintTable SocintTable",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler and the library are available in the default target directory.
#[test]
fn c_program_links_and_runs() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("../../target"));
    let lib = target.join("debug/libsocint_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or {} missing", lib.display());
        return;
    }
    let exe = tempfile_path();
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "C smoke test exited with {:?}",
        out.status.code()
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.346515"));
    let _ = std::fs::remove_file(exe);
}

fn tempfile_path() -> PathBuf {
    std::env::temp_dir().join(format!("socint_smoke_{}", std::process::id()))
}
