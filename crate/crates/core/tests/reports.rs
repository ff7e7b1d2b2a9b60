//! Report emission through the public run API.

use kleinian::report::{self, ResidualReport, Verdict};
use kleinian::suite;
use kleinian::SuiteConfig;

fn config() -> SuiteConfig {
    SuiteConfig {
        seeds: vec![2],
        suites: vec!["periods".into(), "painleve".into()],
        points_per_curve: 2,
        ..SuiteConfig::default()
    }
}

#[test]
fn json_and_csv_mirror_the_records() {
    let recs = suite::run(&config()).unwrap();
    assert!(!recs.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    report::write_atomic(&path, &report::to_json(&recs)).unwrap();
    let back: Vec<ResidualReport> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.len(), recs.len());
    for (a, b) in back.iter().zip(&recs) {
        assert_eq!((&a.suite, &a.identity, &a.inputs, a.verdict), (&b.suite, &b.identity, &b.inputs, b.verdict));
        assert!((a.residual - b.residual).abs() <= 1e-15 * b.residual.abs());
    }
    let csv = report::to_csv(&recs);
    assert_eq!(csv.lines().count(), recs.len() + 1);
    assert!(csv.starts_with("suite,identity,equation,inputs,residual,tolerance,verdict,wall_time_ms"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn field_names_are_exact() {
    let recs = suite::run(&config()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report::to_json(&recs[..1])).unwrap();
    let mut keys: Vec<&str> = v[0].as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    let mut want = vec!["suite", "identity", "equation", "inputs", "residual", "tolerance", "verdict", "wall_time_ms"];
    want.sort();
    assert_eq!(keys, want);
}

#[test]
fn timing_is_opt_in() {
    let mut cfg = config();
    assert!(suite::run(&cfg).unwrap().iter().all(|r| r.wall_time_ms == 0.0));
    cfg.timing = true;
    assert!(suite::run(&cfg).unwrap().iter().any(|r| r.wall_time_ms > 0.0));
}

#[test]
fn diagnostics_never_gate() {
    let mut cfg = config();
    cfg.suites = vec!["diagnostics".into()];
    let recs = suite::run(&cfg).unwrap();
    assert!(recs.iter().any(|r| r.verdict == Verdict::Diagnostic && !r.within_tolerance()));
    assert!(recs.iter().filter(|r| r.verdict == Verdict::Diagnostic).all(|r| r.passed()));
}
