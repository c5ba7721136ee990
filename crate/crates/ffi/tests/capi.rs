use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use finsler_ffi::*;

const RANDERS: &str = r#"{"schema_version":1,"family":"randers","dimension":2,"coefficients":{"b1":"0.3*x2"}}"#;

fn load(json: &str) -> *mut FinslerMetricHandle {
    let src = CString::new(json).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { finsler_metric_from_json(src.as_ptr(), &mut handle) };
    assert_eq!(status, FinslerStatus::Ok);
    assert!(!handle.is_null());
    handle
}

fn last_error() -> String {
    let p = finsler_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn evaluates_through_a_handle() {
    let h = load(RANDERS);
    unsafe {
        assert_eq!(finsler_metric_dimension(h), 2);
        let (x, y) = ([0.5, 1.0], [1.0, 0.0]);
        let mut f = 0.0;
        assert_eq!(finsler_metric_f(h, x.as_ptr(), y.as_ptr(), 2, &mut f), FinslerStatus::Ok);
        assert!((f - 1.3).abs() < 1e-15);

        let mut g = [0.0; 4];
        assert_eq!(finsler_fundamental_tensor(h, x.as_ptr(), y.as_ptr(), 2, g.as_mut_ptr(), 4), FinslerStatus::Ok);
        assert!((g[1] - g[2]).abs() < 1e-15 && g[0] > 0.0);

        let mut gamma = [0.0; 8];
        assert_eq!(finsler_chern_coefficients(h, x.as_ptr(), y.as_ptr(), 2, gamma.as_mut_ptr(), 8), FinslerStatus::Ok);
        let mut adot = [0.0; 8];
        assert_eq!(finsler_landsberg_tensor(h, x.as_ptr(), [1.0, 0.5].as_ptr(), 2, adot.as_mut_ptr(), 8), FinslerStatus::Ok);
        assert!(adot.iter().any(|v| v.abs() > 1e-3));
        let mut a = [0.0; 8];
        assert_eq!(finsler_cartan_tensor(h, x.as_ptr(), y.as_ptr(), 2, a.as_mut_ptr(), 8), FinslerStatus::Ok);

        let mut vol = 0.0;
        assert_eq!(finsler_indicatrix_volume(h, [0.5, 0.0].as_ptr(), 2, 256, &mut vol), FinslerStatus::Ok);
        assert!((vol - 2.0 * std::f64::consts::PI).abs() < 1e-10);

        let mut hm = [0.0; 4];
        let measure = CString::new("1 + 0.5*y1^2").unwrap();
        assert_eq!(
            finsler_averaged_metric(h, measure.as_ptr(), x.as_ptr(), 2, 128, hm.as_mut_ptr(), 4),
            FinslerStatus::Ok
        );
        assert!(hm[0] > 0.0 && (hm[1] - hm[2]).abs() < 1e-15);
        finsler_metric_free(h);
    }
}

#[test]
fn analysis_json_round_trip() {
    let h = load(RANDERS);
    unsafe {
        let mut out = ptr::null_mut();
        let status = finsler_analyze_json(h, [0.5, 1.0].as_ptr(), [1.0, 0.5].as_ptr(), 2, 1e-6, &mut out);
        assert_eq!(status, FinslerStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        finsler_string_free(out);
        assert!(text.contains("\"classification\""));
        assert!(text.contains("\"landsberg\""));
        finsler_metric_free(h);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut handle = ptr::null_mut();
        assert_eq!(finsler_metric_from_json(ptr::null(), &mut handle), FinslerStatus::NullPointer);
        let bad = CString::new(r#"{"schema_version":1,"family":"dsl","dimension":2,"coefficients":{"F":"sqrt(y1^2+"}}"#).unwrap();
        assert_eq!(finsler_metric_from_json(bad.as_ptr(), &mut handle), FinslerStatus::InvalidInput);
        assert!(handle.is_null());
        assert!(last_error().contains("in `F`"));

        let h = load(RANDERS);
        let mut f = 0.0;
        assert_eq!(finsler_metric_f(h, [0.0; 3].as_ptr(), [1.0; 3].as_ptr(), 3, &mut f), FinslerStatus::InvalidInput);
        assert_eq!(finsler_metric_f(h, [0.0; 2].as_ptr(), [0.0; 2].as_ptr(), 2, &mut f), FinslerStatus::Numerical);
        assert!(last_error().contains("zero section"));
        let mut small = [0.0; 3];
        assert_eq!(
            finsler_fundamental_tensor(h, [0.0; 2].as_ptr(), [1.0, 0.0].as_ptr(), 2, small.as_mut_ptr(), 3),
            FinslerStatus::BufferTooSmall
        );
        assert_eq!(finsler_metric_dimension(ptr::null()), 0);
        finsler_metric_free(h);
        finsler_metric_free(ptr::null_mut());
        finsler_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(finsler_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/finsler.h")).unwrap();
    for name in [
        "finsler_metric_from_json",
        "finsler_metric_free",
        "finsler_fundamental_tensor",
        "finsler_chern_coefficients",
        "finsler_landsberg_tensor",
        "finsler_averaged_metric",
        "finsler_analyze_json",
        "finsler_last_error",
        "FINSLER_STATUS_BUFFER_TOO_SMALL",
        "typedef struct FinslerMetricHandle FinslerMetricHandle;",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the shared library when a C compiler is present.
#[test]
fn c_program_links_against_the_library() {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = target_dir.join("libfinsler_ffi.so");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no shared library or C compiler");
        return;
    }
    let dir = std::env::temp_dir().join(format!("finsler-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "finsler.h"
int main(void) {
    FinslerMetricHandle *m = NULL;
    const char *spec = "{\"schema_version\":1,\"family\":\"riemannian\",\"dimension\":2,\"coefficients\":{\"a11\":\"4\",\"a22\":\"9\"}}";
    if (finsler_metric_from_json(spec, &m) != FINSLER_STATUS_OK) return 1;
    double x[2] = {0.0, 0.0}, vol = 0.0;
    if (finsler_indicatrix_volume(m, x, 2, 256, &vol) != FINSLER_STATUS_OK) return 2;
    printf("%.12f\n", vol);
    finsler_metric_free(m);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include"))
        .arg("-L")
        .arg(&target_dir)
        .arg("-lfinsler_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).env("LD_LIBRARY_PATH", &target_dir).output().unwrap();
    assert!(out.status.success());
    let vol: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((vol - 2.0 * std::f64::consts::PI).abs() < 1e-9);
}
