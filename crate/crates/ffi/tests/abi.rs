use std::ffi::{CStr, CString};
use std::ptr;

use softbend_ffi::*;

fn last_error() -> String {
    let p = sb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn short_config() -> *mut SbConfig {
    let cfg = sb_config_default();
    let key = CString::new("reference.duration_s").unwrap();
    assert_eq!(unsafe { sb_config_set(cfg, key.as_ptr(), 2.0) }, SbStatus::Ok as i32);
    cfg
}

#[test]
fn episode_round_trip() {
    let cfg = short_config();
    unsafe {
        assert_eq!(sb_config_set_mode(cfg, SbMode::TwoDof as i32), 0);
        let mut trace = ptr::null_mut();
        assert_eq!(sb_run_episode(cfg, &mut trace), 0);
        assert_eq!(sb_trace_len(trace), 1001);

        let mut s = SbSample::default();
        assert_eq!(sb_trace_sample(trace, 1000, &mut s), 0);
        assert_eq!(s.t_s, 2.0);
        assert_eq!(s.error_deg, s.theta_ref_deg - s.theta_meas_deg);
        assert_eq!(sb_trace_sample(trace, 1001, &mut s), SbStatus::OutOfBounds as i32);
        assert!(last_error().contains("1001"));

        let mut m = SbMetrics::default();
        assert_eq!(sb_trace_metrics(trace, &mut m), 0);
        assert!(m.rmse_deg > 0.0 && m.var_deg2 >= 0.0);

        sb_trace_free(trace);
        sb_config_free(cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    let cfg = short_config();
    unsafe {
        let key = CString::new("tuner.kappa").unwrap();
        assert_eq!(sb_config_set(cfg, key.as_ptr(), -1.0), SbStatus::Config as i32);
        assert!(last_error().contains("tuner.kappa"));
        assert_eq!(sb_config_set_mode(cfg, 17), SbStatus::Config as i32);

        let bad = CString::new("[tuner]\nkapa = 1.0\n").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(sb_config_parse(bad.as_ptr(), &mut out), SbStatus::Config as i32);
        assert!(out.is_null());

        let missing = CString::new("/nonexistent/softbend.toml").unwrap();
        assert_eq!(sb_config_load(missing.as_ptr(), &mut out), SbStatus::Io as i32);
        sb_config_free(cfg);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut trace = ptr::null_mut();
        assert_eq!(sb_run_episode(ptr::null(), &mut trace), SbStatus::NullPointer as i32);
        assert_eq!(sb_trace_len(ptr::null()), 0);
        assert_eq!(
            sb_config_set(ptr::null_mut(), ptr::null(), 0.0),
            SbStatus::NullPointer as i32
        );
        sb_trace_free(ptr::null_mut());
        sb_config_free(ptr::null_mut());
    }
}

#[test]
fn trace_csv_matches_library_writer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config();
    unsafe {
        let mut trace = ptr::null_mut();
        assert_eq!(sb_run_episode(cfg, &mut trace), 0);
        let path = dir.path().join("t.csv");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(sb_trace_write_csv(trace, cpath.as_ptr()), 0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(
            text.starts_with("t_s,theta_ref_deg,theta_meas_deg,error_deg,p_ref_kpa,p_meas_kpa,u_v,kp_gain,kff_gain\n")
        );
        assert_eq!(text.lines().count(), 1002);
        sb_trace_free(trace);
        sb_config_free(cfg);
    }
}

/// Compiles and runs `tests/c/smoke.c` against the static library when a C
/// compiler is on PATH.
#[test]
fn c_program_links_against_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-xxxx -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsoftbend_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "compilation failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok 1001");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
