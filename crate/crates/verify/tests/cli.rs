use std::path::Path;
use std::process::Command;

fn verify(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .env("VERIFY_LOG", "quiet")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn records(path: &Path) -> Vec<serde_json::Value> {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn passing_suites_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"suites": ["periods", "elliptic"], "csv": {:?}}}"#, csv.to_string_lossy()),
    );
    let (code, _, _) = verify(&["run", "--config", &cfg, "--seeds", "1,2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let recs = records(&out);
    assert!(recs.iter().all(|r| r["verdict"] != "fail"));
    assert!(recs.iter().any(|r| r["inputs"].as_str().unwrap().starts_with("seed=2")));
    assert!(!recs.iter().any(|r| r["inputs"].as_str().unwrap().starts_with("seed=3")));
    let lines = std::fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(lines, recs.len() + 1);
}

#[test]
fn unattainable_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = write(dir.path(), "cfg.json", r#"{"tolerances": {"recursion-g2": 1e-20}}"#);
    let (code, _, _) = verify(&[
        "run", "--config", &cfg, "--suites", "recursion-g2", "--max-m", "3", "--seeds", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    let recs = records(&out);
    assert!(recs.iter().any(|r| r["verdict"] == "fail" && r["tolerance"] == 1e-20));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_suite = write(dir.path(), "a.json", r#"{"suites": ["periods", "bogus"]}"#);
    assert_eq!(verify(&["run", "--config", &bad_suite]).0, 2);
    let bad_json = write(dir.path(), "b.json", "{ not json");
    assert_eq!(verify(&["run", "--config", &bad_json]).0, 2);
    assert_eq!(verify(&["run", "--suites", "periods,nope"]).0, 2);
    assert_eq!(verify(&["run", "--max-m", "1"]).0, 2);
    assert_eq!(verify(&["run", "--config", "/nonexistent/cfg.json"]).0, 2);
    assert_eq!(verify(&["frobnicate"]).0, 2);
}

#[test]
fn curve_without_a_usable_cut_layout_exits_three() {
    // roots -1.5, 0, 0.001, 1, 2: parses, but no cut keeps clear of the close pair
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"seeds": [], "suites": ["periods"], "curves": [{"genus": 2, "lambdas":
            [[0,0],[-0.003,0],[3.0025,0],[-2.4985,0],[-1.501,0],[1,0]]}]}"#,
    );
    assert_eq!(verify(&["run", "--config", &cfg]).0, 3);
    let coincident = write(
        dir.path(),
        "bad.json",
        r#"{"seeds": [], "curves": [{"genus": 2, "lambdas": [[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}]}"#,
    );
    assert_eq!(verify(&["run", "--config", &coincident]).0, 2);
}

#[test]
fn unwritable_output_exits_four() {
    let (code, _, _) = verify(&["run", "--suites", "periods", "--seeds", "1", "--out", "/nonexistent/dir/r.json"]);
    assert_eq!(code, 4);
    let (code, _, _) = verify(&["curve", "--seed", "1", "--out", "/nonexistent/dir/c.json"]);
    assert_eq!(code, 4);
}

#[test]
fn curve_round_trips_through_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.json");
    assert_eq!(verify(&["curve", "--seed", "11", "--out", curve.to_str().unwrap()]).0, 0);
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&curve).unwrap()).unwrap();
    assert_eq!(c["genus"], 2);
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"seeds": [], "suites": ["periods"], "curve_files": [{:?}]}}"#, curve.to_string_lossy()),
    );
    let (code, stdout, _) = verify(&["run", "--config", &cfg]);
    assert_eq!(code, 0);
    let recs: Vec<serde_json::Value> = serde_json::from_str(&stdout).unwrap();
    assert!(recs.iter().any(|r| r["inputs"] == "curve=0"));
}

#[test]
fn reports_are_deterministic_and_logs_are_controlled() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(verify(&["run", "--suites", "theta,painleve", "--seeds", "3", "--out", p.to_str().unwrap()]).0, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["run", "--suites", "periods", "--seeds", "1", "--out", a.to_str().unwrap()])
        .env("VERIFY_LOG", "loud")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(["run", "--suites", "periods", "--seeds", "1", "--out", a.to_str().unwrap()])
        .env("VERIFY_LOG", "info")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("report written"));
}

#[test]
fn period_cache_is_written_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("periods.json");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = |out: &Path| {
        vec![
            "run".to_string(), "--suites".into(), "kleinian".into(), "--seeds".into(), "2".into(),
            "--cache-periods".into(), cache.to_string_lossy().into_owned(), "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    let run = |out: &Path| {
        let a = args(out);
        verify(&a.iter().map(|s| s.as_str()).collect::<Vec<_>>()).0
    };
    assert_eq!(run(&a), 0);
    assert!(cache.exists());
    assert_eq!(run(&b), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
