mod common;

use std::fs;

use common::{equation, run, stdout_json, validate};
use serde_json::Value;

fn path(name: &str) -> String {
    equation(name).to_string_lossy().into_owned()
}

#[test]
fn example_three_report() {
    let out = run(&["check", &path("ex3.json"), "--param", "alpha=1", "--param", "beta=0.9", "--horizon", "2000", "--step", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    let w = r["checks"].as_array().unwrap().iter().find(|c| c["id"] == "one_plus_one_over_e").unwrap();
    let value = w["evidence"]["weighted_limsup"]["value"].as_f64().unwrap();
    assert!((value - 1.9 * std::f64::consts::LN_2).abs() < 0.005, "{value}");
    assert!(r["strongest"] == "AsymptoticallyStable" || r["strongest"] == "ExponentiallyStable", "{}", r["strongest"]);
}

#[test]
fn integrable_report_validates_against_schema() {
    let out = run(&["check", &path("integrable.json"), "--horizon", "200", "--step", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["strongest"], "NotAsymptoticallyStable");
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap())
            .unwrap();
    validate(&schema, &schema, &r, "$").unwrap();
}

#[test]
fn every_equation_file_report_validates() {
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap())
            .unwrap();
    for entry in fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/equations")).unwrap() {
        let p = entry.unwrap().path();
        let out = run(&["check", &p.to_string_lossy(), "--horizon", "100", "--step", "0.01"]);
        assert!(matches!(out.status.code(), Some(0 | 2)), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
        validate(&schema, &schema, &stdout_json(&out), "$").unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn malformed_json_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"t_start\": 0,\n  \"terms\": [ }").unwrap();
    let out = run(&["check", &p.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_parameter_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("eq.json");
    fs::write(&p, r#"{"t_start": 0, "terms": [{"coef": "gamma", "delay": "t - 1"}]}"#).unwrap();
    let out = run(&["check", &p.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("terms[0].coef"));
}

#[test]
fn failed_validation_exits_two() {
    let out = run(&["check", &path("future_delay.json"), "--horizon", "50", "--step", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["strongest"], "NoConclusion");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["simulate", &path("ex2.json"), "--horizon", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["check"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn example_two_simulation_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = run(&["simulate", &path("ex2.json"), "--horizon", "500", "--histories", "5", "--seed", "7", "--out", &out_dir.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["classification"]["class"], "Decaying", "{s}");
    for i in 0..5 {
        let csv = fs::read_to_string(out_dir.join(format!("trajectory_{i:02}.csv"))).unwrap();
        assert!(csv.starts_with("t,x\n"));
    }
}

#[test]
fn simulation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let d = dir.path().join(name);
        let out = run(&["simulate", &path("shift.json"), "--horizon", "30", "--histories", "3", "--seed", "11", "--out", &d.to_string_lossy()]);
        assert_eq!(out.status.code(), Some(0));
        let mut files: Vec<_> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        bodies.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(bodies[0].len(), 5);
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn example_one_fundamental_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fundamental", &path("ex1.json"), "-s", "0", "--horizon", "40", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let lambda = fit["fit"]["lambda"].as_f64().unwrap();
    assert!((lambda - 0.5).abs() < 0.02, "{fit}");
    assert!((fit["final_value"].as_f64().unwrap() - (-20.0f64).exp()).abs() < 1e-12);
    assert!(dir.path().join("fundamental.csv").exists());
}

#[test]
fn environment_sets_defaults() {
    let out = common::bin()
        .args(["check", &path("shift.json"), "--step", "0.01"])
        .env("DDESTAB_HORIZON", "60")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["horizon"], 60.0);
}
