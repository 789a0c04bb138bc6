use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinn-forge")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const GOOD: &str = r#"{
  "problem": {"preset": "friction", "sigma": 0.0},
  "operators": ["friction"],
  "counts": {"n": 6, "n_e": 0, "n_r": 16},
  "arch": {"h": 1, "d": 4},
  "m": 2,
  "seed": 1,
  "epochs": 12,
  "lr": 0.01,
  "monitor_every": 5,
  "kind": "ridge",
  "lambdas": {"d": 1.0, "ridge": 0.001}
}"#;

#[test]
fn train_writes_metrics_checkpoint_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GOOD);
    let out = dir.path().join("run");
    let o = run(&["train", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let steps: Vec<&str> = metrics.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "5", "10", "12"]);
    let ckpt: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("checkpoint.json")).unwrap()).unwrap();
    assert!(ckpt.is_object());
    let result: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(result.is_object());
}

#[test]
fn invalid_config_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = GOOD.replace(r#""lambdas": {"d": 1.0, "ridge": 0.001}"#, r#""lambdas": {"d": 0.0, "e": 0.0}"#);
    let cfg = write_config(dir.path(), &bad);
    let o = run(&["train", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["kind"], "invalid_spec");
    assert!(err["error"].as_str().unwrap().contains("lambda"));
}

#[test]
fn unparsable_expression_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
  "problem": {"domain": {"lo": [0.0], "hi": [1.0]}, "u_star": ["sin(x0"], "d2": 1},
  "operators": ["friction"],
  "counts": {"n": 4, "n_e": 0, "n_r": 4},
  "arch": {"h": 1, "d": 2},
  "m": 2,
  "seed": 0,
  "epochs": 2
}"#;
    let cfg = write_config(dir.path(), text);
    let o = run(&["train", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(err["kind"].is_string());
}

#[test]
fn missing_config_file_fails() {
    let o = run(&["train", "/nonexistent/config.json"]);
    assert!(!o.status.success());
}
