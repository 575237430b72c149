use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use simisac::rates;
use simisac::scenario::ScenarioConfig;
use simisac::scheduler::{run_episode, Baseline};
use simisac_ffi::*;

fn last_error() -> String {
    let p = simisac_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn config(text: &str) -> *mut SimisacConfig {
    let src = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { simisac_config_parse(src.as_ptr(), &mut cfg) }, SimisacStatus::Ok);
    cfg
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { simisac_string_free(s) };
    out
}

#[test]
fn scalar_functions_match_core() {
    let mut x = 0.0;
    assert_eq!(unsafe { simisac_qfunc_inv(1e-5, &mut x) }, SimisacStatus::Ok);
    assert_eq!(x, rates::qfunc_inv(1e-5).unwrap());
    assert!(simisac_last_error().is_null());

    let mut r = 0.0;
    assert_eq!(unsafe { simisac_fbl_rate(10.0, 180e3, 3, 256.0, 1e-5, &mut r) }, SimisacStatus::Ok);
    assert_eq!(r, rates::fbl_rate(10.0, 180e3, 3, 256.0, 1e-5).unwrap());

    let mut k = 0u64;
    assert_eq!(unsafe { simisac_poisson_icdf(4.0, 0.99, &mut k) }, SimisacStatus::Ok);
    assert_eq!(k, rates::poisson_icdf(4.0, 0.99).unwrap());
}

#[test]
fn domain_errors_set_the_message() {
    let mut x = 0.0;
    assert_eq!(unsafe { simisac_qfunc_inv(1.5, &mut x) }, SimisacStatus::Domain);
    assert!(last_error().contains("domain"), "{}", last_error());
    assert_eq!(unsafe { simisac_qfunc_inv(0.5, ptr::null_mut()) }, SimisacStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
}

#[test]
fn config_round_trip_and_validation() {
    let cfg = config("num_rbs = 5\n");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { simisac_config_to_string(cfg, &mut s) }, SimisacStatus::Ok);
    let text = take(s);
    assert_eq!(text, ScenarioConfig::parse("num_rbs = 5\n").unwrap().to_config_string());

    let mut n = usize::MAX;
    assert_eq!(unsafe { simisac_config_validate(cfg, &mut n) }, SimisacStatus::Ok);
    assert_eq!(n, 0);

    let (k, v) = (CString::new("reliability").unwrap(), CString::new("2").unwrap());
    assert_eq!(unsafe { simisac_config_set(cfg, k.as_ptr(), v.as_ptr()) }, SimisacStatus::Ok);
    assert_eq!(unsafe { simisac_config_validate(cfg, &mut n) }, SimisacStatus::InvalidConfig);
    assert_eq!(n, 1);
    assert!(last_error().contains("reliability"));

    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { simisac_config_set(cfg, bad.as_ptr(), v.as_ptr()) }, SimisacStatus::Parse);
    unsafe { simisac_config_free(cfg) };
}

#[test]
fn parse_errors_and_bad_utf8() {
    let src = CString::new("num_rbs = many\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { simisac_config_parse(src.as_ptr(), &mut cfg) }, SimisacStatus::Parse);
    assert!(cfg.is_null());
    assert!(last_error().starts_with("line 1"), "{}", last_error());

    let raw = [0xffu8, 0];
    assert_eq!(
        unsafe { simisac_config_parse(raw.as_ptr().cast(), &mut cfg) },
        SimisacStatus::InvalidUtf8
    );
    assert_eq!(unsafe { simisac_config_parse(ptr::null(), &mut cfg) }, SimisacStatus::NullPointer);
}

#[test]
fn episode_matches_core() {
    let cfg = config("num_slots = 1\n");
    let mut trace = ptr::null_mut();
    let st = unsafe { simisac_run_episode(cfg, SimisacBaseline::RandomSim, 11, &mut trace) };
    assert_eq!(st, SimisacStatus::Ok);

    let core_cfg = ScenarioConfig::parse("num_slots = 1\n").unwrap();
    let expected = run_episode(&core_cfg, Baseline::RandomSim, 11).unwrap();
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { simisac_trace_text(trace, &mut text) }, SimisacStatus::Ok);
    assert_eq!(take(text), expected.to_text());

    let mut s = SimisacSummary::default();
    assert_eq!(unsafe { simisac_trace_summary(trace, &mut s) }, SimisacStatus::Ok);
    assert_eq!(s.objective, expected.summary.objective);
    assert_eq!(s.minislots, expected.summary.minislots);
    assert_eq!(s.violation_rate, expected.summary.violation_rate());

    unsafe {
        simisac_trace_free(trace);
        simisac_config_free(cfg);
        simisac_trace_free(ptr::null_mut());
        simisac_config_free(ptr::null_mut());
        simisac_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let cfg = config("num_rbs = 0\n");
    let mut trace = ptr::null_mut();
    let st = unsafe { simisac_run_episode(cfg, SimisacBaseline::Proposed, 0, &mut trace) };
    assert_eq!(st, SimisacStatus::InvalidConfig, "{}", last_error());
    assert!(trace.is_null());
    unsafe { simisac_config_free(cfg) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(simisac_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn staticlib() -> Option<PathBuf> {
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "simisac-ffi"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .status()
        .ok()?;
    assert!(built.success(), "cargo build of the static library failed");
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libsimisac_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(lib) = staticlib() else {
        eprintln!("skipping: static library not found next to the test binary");
        return;
    };
    let Ok(_) = Command::new("cc").arg("--version").output() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let cfg = ScenarioConfig { num_slots: 1, ..ScenarioConfig::desk_scale() };
    let t = run_episode(&cfg, Baseline::Proposed, 3).unwrap();
    let got = String::from_utf8_lossy(&run.stdout);
    let fields: Vec<&str> = got.split_whitespace().collect();
    let objective: f64 = fields[0]["objective=".len()..].parse().unwrap();
    assert_eq!(objective, t.summary.objective, "{got}");
    assert_eq!(fields[1], format!("minislots={}", t.summary.minislots));
}
