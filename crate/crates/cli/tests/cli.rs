use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BASE: &str = r#"{
  "schema": 1,
  "sequence": {"kind": "arithmetic", "params": {"step": 1.0, "offset": 1.0, "two_sided": true}, "count": 200},
  "sigma": 1.0,
  "family": {"family": "log_peak", "params": {"r": 3.0, "height": 0.5}},
  "x": [0.5],
  "z": [[0.0, 1.0]],
  "criteria": {"bm_radius": {"c_lo": 2.0, "c_hi": 12.0, "tol": 0.2}},
  "search": {"budget": 20, "restarts": 1, "radii": [1.0, 2.0, 4.0]}
}"#;

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expcomplete"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn poisson_report_has_envelope() {
    let dir = TempDir::new().unwrap();
    let out = run(&["poisson"], &write_config(&dir, BASE));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "poisson");
    let p = &v["result"]["points"][0]["poisson"];
    assert!(p["value"].as_f64().unwrap() > 0.0);
    assert!(p["abs_error"].as_f64().is_some());
}

#[test]
fn sigma_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let out = run(&["functional", "--sigma", "2.5"], &write_config(&dir, BASE));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["config"]["sigma"], 2.5);
    let density = v["result"]["report"]["density"].as_f64().unwrap();
    assert!((density - 2.5 / std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn d_flag_replaces_sigma() {
    let dir = TempDir::new().unwrap();
    let out = run(&["functional", "--d", "4"], &write_config(&dir, BASE));
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["config"].get("sigma").is_none());
    assert_eq!(v["config"]["d"], 4.0);
}

#[test]
fn sigma_and_d_flags_conflict() {
    let dir = TempDir::new().unwrap();
    let out = run(&["functional", "--sigma", "1", "--d", "2"], &write_config(&dir, BASE));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "{\n  \"schema\": 1,\n  \"sigma\": oops\n}");
    let out = run(&["functional"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config.json:3:"), "{err}");
}

#[test]
fn unknown_field_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let body = BASE.replacen("\"sigma\"", "\"sigmaa\"", 1);
    let out = run(&["functional"], &write_config(&dir, &body));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigmaa"));
}

#[test]
fn wrong_schema_version() {
    let dir = TempDir::new().unwrap();
    let body = BASE.replacen("\"schema\": 1", "\"schema\": 2", 1);
    let out = run(&["poisson"], &write_config(&dir, &body));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run(&["frobnicate"], &write_config(&dir, BASE));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inadmissible_function_is_refused() {
    let dir = TempDir::new().unwrap();
    let body = BASE.replacen(
        r#""family": {"family": "log_peak", "params": {"r": 3.0, "height": 0.5}}"#,
        r#""shape": {"shape": "tent", "left": 1.0, "peak": 2.0, "right": 3.0, "height": 1.0}"#,
        1,
    );
    let out = run(&["functional"], &write_config(&dir, &body));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let allowed = body.replacen("\"schema\": 1,", "\"schema\": 1, \"require_membership\": false,", 1);
    let out = run(&["functional"], &write_config(&dir, &allowed));
    assert!(out.status.success());
    assert_eq!(json(&out)["result"]["membership_overall"], false);
}

#[test]
fn shifts_are_reported() {
    let dir = TempDir::new().unwrap();
    let body = BASE.replacen("\"schema\": 1,", "\"schema\": 1, \"shifts\": {\"2\": [0.5, 0.5]},", 1);
    let out = run(&["functional"], &write_config(&dir, &body));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["shifted_indices"], serde_json::json!([2]));
}

#[test]
fn out_dir_and_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, BASE);
    let out_dir = dir.path().join("reports");
    let out = run(&["sweep", "--csv", "--out", out_dir.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "sweep");
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("radius,best_value"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn csv_needs_out() {
    let dir = TempDir::new().unwrap();
    let out = run(&["sweep", "--csv"], &write_config(&dir, BASE));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bm_radius_of_integers() {
    let dir = TempDir::new().unwrap();
    let out = run(&["bm-radius"], &write_config(&dir, BASE));
    assert!(out.status.success());
    let r = json(&out)["result"]["radius_estimate"].as_f64().unwrap();
    assert!((r - 2.0 * std::f64::consts::PI).abs() < 0.3, "{r}");
}

#[test]
fn classify_sector_corpus() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
      "schema": 1,
      "sequence": {"kind": "sector", "params": {"angle": 0.7853981633974483, "exponent": 2.0}, "count": 500},
      "d": 1.0,
      "criteria": {"sector": {"alpha": 0.7}}
    }"#;
    let out = run(&["classify"], &write_config(&dir, body));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdicts = json(&out)["result"]["verdicts"].clone();
    let verdicts = verdicts.as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    assert!(verdicts.iter().all(|v| v["class"] == "incomplete_all_d"));
}

#[test]
fn hilbert_at_tent_peak_is_divergent() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
      "schema": 1,
      "shape": {"shape": "tent", "left": 1.0, "peak": 2.0, "right": 3.0, "height": 1.0},
      "x": [2.0]
    }"#;
    let out = run(&["hilbert"], &write_config(&dir, body));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d = &json(&out)["result"]["points"][0]["derivative"]["result"];
    assert_eq!(d["status"], "divergent");
    assert_eq!(d["value"], "-inf");
}

#[test]
fn missing_inputs_are_validation_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(&["search"], &write_config(&dir, r#"{"schema": 1, "sigma": 1.0}"#));
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["hilbert"], &write_config(&dir, r#"{"schema": 1, "shape": {"shape": "zero"}}"#));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn starved_quadrature_blocks_membership() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
      "schema": 1,
      "family": {"family": "log_peak", "params": {"r": 1.0, "height": 1.0}},
      "quadrature": {"max_evaluations": 50}
    }"#;
    let out = run(&["verify-testfn"], &write_config(&dir, body));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inconclusive"));
}
