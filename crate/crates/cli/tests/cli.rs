use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).to_str().unwrap().to_string()
}

fn lazlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lazlab"))
        .args(args)
        .env_remove("LAZLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with("{\"error\"")).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn domain_check_reports_geometry() {
    let o = lazlab(&["domain", "check", &data("circle.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!((v["perimeter"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((v["lazutkin_constant"].as_f64().unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn orbit_csv_layout_and_determinism() {
    let args = ["orbit", &data("d1.json"), "--phi", "0.4", "--steps", "10"];
    let a = lazlab(&args);
    let b = lazlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,s,phi,x,y");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
}

#[test]
fn coeffs_writes_both_sources() {
    let dir = tempfile::tempdir().unwrap();
    let o = lazlab(&["coeffs", &data("d1.json"), "--grid", "8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,alpha3,alpha4,beta4,alpha3prime,source");
    assert_eq!(csv.lines().filter(|l| l.ends_with(",closed")).count(), 8);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",fitted")).count(), 8);
}

#[test]
fn json_format_is_one_document() {
    let o = lazlab(&["coeffs", &data("circle.json"), "--grid", "8", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["data"]["profile"]["closed"]["x"].as_array().unwrap().len(), 8);
}

#[test]
fn compare_finds_the_shift() {
    let o = lazlab(&["compare", &data("d1.json"), &data("d1_shifted.json")]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["match"], Value::Bool(true));
    assert_eq!(v["reflected"], Value::Bool(false));
    assert!((v["shift"].as_f64().unwrap() - 0.25).abs() < 1e-6);
}

#[test]
fn compare_rejects_distinct_domains() {
    let o = lazlab(&["compare", &data("d1.json"), &data("d2.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["match"], Value::Bool(false));
}

#[test]
fn compare_accepts_rigidity_csvs() {
    let dir = tempfile::tempdir().unwrap();
    for (spec, sub) in [("d1.json", "a"), ("d1_shifted.json", "b")] {
        let out = dir.path().join(sub);
        let o = lazlab(&["reconstruct", &data(spec), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let a = dir.path().join("a/reconstruction.csv");
    let b = dir.path().join("b/reconstruction.csv");
    let o = lazlab(&["compare", path(&a), path(&b)]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn reconstruct_round_trip() {
    let o = lazlab(&["reconstruct", &data("d1.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!(v["round_trip_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["data"]["reconstruction"]["log_rho"].as_array().unwrap().len(), 64);
}

#[test]
fn invariant_with_validated_weights_is_a_failed_verdict() {
    let o = lazlab(&["invariant", &data("d1.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["degenerate"]["rank"], Value::from(1));
}

#[test]
fn conjugacy_is_tangent() {
    let dir = tempfile::tempdir().unwrap();
    let o = lazlab(&[
        "conjugacy",
        &data("d1.json"),
        &data("d2.json"),
        "--grid",
        "128",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["tangent"], Value::Bool(true));
    let jet = std::fs::read_to_string(dir.path().join("jet_solved.csv")).unwrap();
    assert_eq!(jet.lines().next().unwrap(), "s,a0,a0prime,b1");
    assert_eq!(jet.lines().count(), 129);
}

#[test]
fn usage_errors_exit_two_with_json() {
    let o = lazlab(&["coeffs"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"]["kind"], "usage");

    let o = lazlab(&["coeffs", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"]["kind"], "io");

    let o = lazlab(&["orbit", &data("d1.json"), "--phi", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"]["kind"], "invalid_state");

    let o = lazlab(&["coeffs", &data("d1.json"), "--grid", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_convex_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"name": "bad", "c0": 1.0, "harmonics": [{"n": 2, "cos": 1.5, "sin": 0.0}]}"#).unwrap();
    let o = lazlab(&["domain", "check", path(&spec)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"]["kind"], "not_convex");
}

#[test]
fn thread_cap_is_validated_and_does_not_change_output() {
    let args = ["coeffs", &data("d1.json"), "--grid", "8"];
    let bad = Command::new(env!("CARGO_BIN_EXE_lazlab")).args(args).env("LAZLAB_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let one = Command::new(env!("CARGO_BIN_EXE_lazlab")).args(args).env("LAZLAB_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_lazlab")).args(args).env("LAZLAB_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}
