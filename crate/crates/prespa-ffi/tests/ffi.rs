use prespa_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = prespa_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn read_text(f: impl Fn(*mut c_char, usize, *mut usize) -> i32) -> String {
    let mut needed = 0usize;
    assert_eq!(f(ptr::null_mut(), 0, &mut needed), PRESPA_OK);
    let mut buf = vec![0u8; needed + 1];
    assert_eq!(f(buf.as_mut_ptr().cast(), buf.len(), &mut needed), PRESPA_OK);
    assert_eq!(buf[needed], 0);
    String::from_utf8(buf[..needed].to_vec()).unwrap()
}

fn desk_config() -> *mut PrespaConfig {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { prespa_config_new(PRESPA_PROFILE_DESK, &mut cfg) }, PRESPA_OK);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(prespa_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_round_trip_through_json() {
    let cfg = desk_config();
    unsafe {
        assert_eq!(prespa_config_set_seed(cfg, 123), PRESPA_OK);
        let json = read_text(|b, c, n| prespa_config_to_json(cfg, b, c, n));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["seed"], 123);
        let text = CString::new(json).unwrap();
        let mut again = ptr::null_mut();
        assert_eq!(prespa_config_from_json(text.as_ptr(), PRESPA_PROFILE_PAPER, &mut again), PRESPA_OK);
        assert_eq!(read_text(|b, c, n| prespa_config_to_json(again, b, c, n)), read_text(|b, c, n| prespa_config_to_json(cfg, b, c, n)));
        prespa_config_free(again);
        prespa_config_free(cfg);
    }
}

#[test]
fn invalid_arguments_report_errors() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(prespa_config_new(7, &mut cfg), PRESPA_ERR_INVALID_ARGUMENT);
        assert!(last_error().contains("profile"));
        assert!(cfg.is_null());

        assert_eq!(prespa_config_new(PRESPA_PROFILE_DESK, ptr::null_mut()), PRESPA_ERR_NULL_POINTER);

        let bad = CString::new(r#"{"version": 99}"#).unwrap();
        assert_eq!(prespa_config_from_json(bad.as_ptr(), PRESPA_PROFILE_DESK, &mut cfg), PRESPA_ERR_INVALID_ARGUMENT);
        assert!(last_error().contains("version"));

        let cfg = desk_config();
        assert!(prespa_last_error_message().is_null());
        let mut res = ptr::null_mut();
        let cmd = CString::new("no-such-command").unwrap();
        assert_eq!(prespa_run(cfg, cmd.as_ptr(), &mut res), PRESPA_ERR_INVALID_ARGUMENT);
        assert_eq!(prespa_run(ptr::null(), cmd.as_ptr(), &mut res), PRESPA_ERR_NULL_POINTER);

        let mut small = [0 as c_char; 4];
        let mut needed = 0;
        assert_eq!(prespa_config_to_json(cfg, small.as_mut_ptr(), small.len(), &mut needed), PRESPA_ERR_BUFFER_TOO_SMALL);
        assert!(needed > 4);

        let mut probs = [0.0; 3];
        assert_eq!(
            prespa_jump_count_probs(PRESPA_CODE_OPTIMAL, PRESPA_CARDINAL_PLUS_X, 20, 0.1, 5, probs.as_mut_ptr(), probs.len(), ptr::null_mut()),
            PRESPA_ERR_BUFFER_TOO_SMALL
        );
        assert_eq!(prespa_jump_count_probs(PRESPA_CODE_OPTIMAL, 9, 20, 0.1, 2, probs.as_mut_ptr(), 3, ptr::null_mut()), PRESPA_ERR_INVALID_ARGUMENT);
        prespa_config_free(cfg);
        prespa_config_free(ptr::null_mut());
        prespa_result_free(ptr::null_mut());
    }
}

#[test]
fn budget_and_code_numbers() {
    unsafe {
        let cfg = desk_config();
        let (mut l, mut t) = (0.0, 0.0);
        assert_eq!(prespa_budget_totals(cfg, &mut l, &mut t), PRESPA_OK);
        assert!((l - 2.860).abs() < 5e-4 && (t - 3.815).abs() < 5e-4, "{l} {t}");
        prespa_config_free(cfg);

        let mut m = [0.0; 4];
        assert_eq!(prespa_codeword_moments(PRESPA_CODE_EXPERIMENTAL, m.as_mut_ptr()), PRESPA_OK);
        for (got, want) in m.iter().zip([3.6, 3.4, 16.6, 13.0]) {
            assert!((got - want).abs() < 1e-12, "{m:?}");
        }

        let mut probs = [0.0; 21];
        let mut deficit = -1.0;
        assert_eq!(
            prespa_jump_count_probs(PRESPA_CODE_OPTIMAL, PRESPA_CARDINAL_PLUS_Z, 20, 0.3, 20, probs.as_mut_ptr(), probs.len(), &mut deficit),
            PRESPA_OK
        );
        let total: f64 = probs.iter().sum();
        assert!((total + deficit - 1.0).abs() < 1e-12);
        assert!(probs[0] > probs[1] && probs[1] > probs[2]);
    }
}

#[test]
fn run_returns_csv_and_summary() {
    unsafe {
        let cfg = desk_config();
        let mut res = ptr::null_mut();
        let cmd = CString::new("budget").unwrap();
        assert_eq!(prespa_run(cfg, cmd.as_ptr(), &mut res), PRESPA_OK);
        let csv = read_text(|b, c, n| prespa_result_csv(res, b, c, n));
        assert!(csv.starts_with("mechanism,"));
        let summary: serde_json::Value = serde_json::from_str(&read_text(|b, c, n| prespa_result_summary_json(res, b, c, n))).unwrap();
        assert!((summary["longitudinal_per_ms"].as_f64().unwrap() - 2.860).abs() < 5e-4);
        assert!(!read_text(|b, c, n| prespa_result_report(res, b, c, n)).is_empty());
        assert_eq!(read_text(|b, c, n| prespa_result_failure(res, b, c, n)), "");
        prespa_result_free(res);
        prespa_config_free(cfg);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/prespa.h")).unwrap();
    for name in [
        "prespa_version",
        "prespa_last_error_message",
        "prespa_config_new",
        "prespa_config_from_json",
        "prespa_config_set_seed",
        "prespa_config_to_json",
        "prespa_config_free",
        "prespa_run",
        "prespa_result_csv",
        "prespa_result_summary_json",
        "prespa_result_report",
        "prespa_result_failure",
        "prespa_result_free",
        "prespa_codeword_moments",
        "prespa_jump_count_probs",
        "prespa_budget_totals",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct PrespaConfig PrespaConfig;"));
}

fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libprespa_ffi.a");
    assert!(lib.is_file(), "{} not built", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
