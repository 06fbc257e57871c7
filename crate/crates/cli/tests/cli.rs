use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_in(dir: &TempDir, sub: &str, body: &str, extra: &[&str]) -> Output {
    let cfg = config(dir.path(), body);
    let out = dir.path().join("out");
    let out = out.to_string_lossy().into_owned();
    let mut args = vec![
        sub,
        "--config",
        cfg.as_str(),
        "--out",
        out.as_str(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    rer(&args)
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

const FIGURE_1: &str = r#"{
  "model": "linear", "c": 3, "rho": 0.1, "n": 500, "seed": 7,
  "target_cp": 0.4,
  "generator": {"lifetime_floor": 1.0}
}"#;

#[test]
fn experiment_writes_61_row_grid() {
    let dir = TempDir::new().unwrap();
    let o = run_in(&dir, "experiment", FIGURE_1, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = read(&dir, "grid.csv");
    let mut lines = grid.lines();
    assert_eq!(lines.next(), Some("x,m_true,m_rer,m_cr"));
    assert_eq!(lines.count(), 61);
    assert!(read(&dir, "cv_curve.csv").starts_with("h,cv,n_skipped\n"));
    let summary: serde_json::Value = serde_json::from_str(&read(&dir, "summary.json")).unwrap();
    assert!(summary["sup_error"]["rer_hat"].as_f64().unwrap() >= 0.0);
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "experiment");
    assert_eq!(manifest["config"]["replicates"], 50);
    assert!(manifest["config"]["censor_a"].as_f64().unwrap() != 0.0);
}

#[test]
fn invalid_rho_exits_2_naming_field() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        &dir,
        "simulate",
        r#"{"model":"linear","c":3,"rho":1.5,"n":10}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        &dir,
        "simulate",
        r#"{"model":"linear","c":3,"rho":0.1,"n":10,"sed":1}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sed"));
}

#[test]
fn missing_target_for_calibrate_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        &dir,
        "calibrate",
        r#"{"model":"linear","c":3,"rho":0.1,"n":10}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("target_cp"));
}

#[test]
fn generation_failure_exits_1() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"model":"linear","c":0,"rho":0.5,"n":500,"max_attempts":1}"#;
    let o = run_in(&dir, "simulate", body, &[]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn simulate_is_byte_identical() {
    let body = r#"{"model":"cosine","c":1,"rho":0.4,"n":200,"censor_a":-1,"seed":3}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_in(&a, "simulate", body, &[]).status.success());
    assert!(run_in(&b, "simulate", body, &[]).status.success());
    for name in ["data.csv", "gbar.csv", "manifest.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let data = read(&a, "data.csv");
    assert!(data.starts_with("i,x,t,c,y,delta\n"));
    assert_eq!(data.lines().count(), 201);
    assert!(read(&a, "gbar.csv").starts_with("t_jump,value_after\n"));
}

#[test]
fn seed_override_is_recorded() {
    let body = r#"{"model":"cosine","c":1,"rho":0.4,"n":50,"seed":3}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_in(&a, "simulate", body, &["--seed", "99"])
        .status
        .success());
    assert!(run_in(&b, "simulate", body, &[]).status.success());
    let m: serde_json::Value = serde_json::from_str(&read(&a, "manifest.json")).unwrap();
    assert_eq!(m["config"]["seed"], 99);
    assert_eq!(m["seed_override"], 99);
    assert_ne!(read(&a, "data.csv"), read(&b, "data.csv"));
}

#[test]
fn json_format() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"model":"cosine","c":1,"rho":0.4,"n":50,"seed":3}"#;
    assert!(run_in(&dir, "simulate", body, &["--format", "json"])
        .status
        .success());
    let data: serde_json::Value = serde_json::from_str(&read(&dir, "data.json")).unwrap();
    assert_eq!(data["xs"].as_array().unwrap().len(), 50);
    assert!(!dir.path().join("out/data.csv").exists());
}

#[test]
fn calibrate_writes_result() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"model":"linear","c":3,"rho":0.1,"n":300,"target_cp":0.33,
                   "generator":{"lifetime_floor":1.0}}"#;
    let o = run_in(&dir, "calibrate", body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cal: serde_json::Value = serde_json::from_str(&read(&dir, "calibration.json")).unwrap();
    assert!((cal["achieved_cp"].as_f64().unwrap() - 0.33).abs() <= 0.02);
}

#[test]
fn estimate_and_cv_outputs() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"model":"linear","c":3,"rho":0.1,"n":200,"seed":4,"censor_a":0.5,
                   "generator":{"lifetime_floor":1.0},
                   "kinds":["rer_hat","rer_pseudo","cr"],
                   "bandwidth_grid":{"lo":0.1,"hi":1.0,"step":0.1}}"#;
    let o = run_in(&dir, "estimate", body, &["--weighted-cv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&dir, "grid.csv").starts_with("x,m_true,m_rer,m_pseudo,m_cr\n"));
    assert_eq!(read(&dir, "cv_curve.csv").lines().count(), 11);
    let m: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(m["config"]["cv"]["weighted"], true);

    let o = run_in(&dir, "cv", body, &[]);
    assert!(o.status.success());
    assert_eq!(read(&dir, "cv_curve.csv").lines().count(), 11);
}

#[test]
fn compare_and_rate() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"model":"linear","c":3,"rho":0.1,"n":100,"seed":5,"censor_a":1,
                   "generator":{"lifetime_floor":1.0},
                   "fixed_h":0.5,"replicates":3,"rate_ns":[100,200,400]}"#;
    let o = run_in(&dir, "compare", body, &["--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reps = read(&dir, "replicates.csv");
    assert!(reps.starts_with("replicate,kind,sup_error,iae,h_opt,realized_cp\n"));
    assert_eq!(reps.lines().count(), 7);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir, "summary.json")).unwrap();
    assert_eq!(summary["replicates"], 3);

    let o = run_in(&dir, "rate", body, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rate: serde_json::Value = serde_json::from_str(&read(&dir, "rate.json")).unwrap();
    assert_eq!(rate["ns"].as_array().unwrap().len(), 3);
    assert!(rate["slope"].as_f64().unwrap().is_finite());
}
