use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gjsoq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gjsoq")).args(args).output().unwrap()
}

fn json_result(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    doc["result"].clone()
}

fn write_params(dir: &Path, text: &str) -> String {
    let path = dir.join("params.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const TABLE1_JSON: &str =
    r#"{"lambda0": 0.15, "lambda1": 0.05, "lambda2": 0.01, "mu": 0.44, "alpha1": 0.25, "alpha2": 0.1}"#;

#[test]
fn stability_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_params(dir.path(), TABLE1_JSON);
    let out = gjsoq(&["stability", "--params", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(format!("{:.4}", r["rho"].as_f64().unwrap()), "0.7636");
    assert_eq!(r["criterion1"], Value::Bool(true));
    assert_eq!(r["strongly_pooled"], Value::Bool(true));
    assert!(r["drifts"]["h"].is_array());
}

#[test]
fn missing_file_names_the_path() {
    let out = gjsoq(&["stability", "--params", "/no/such/dir/params.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/params.json"));
}

#[test]
fn malformed_and_invalid_params_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_params(dir.path(), r#"{"lambda0": 0.1, "mu": 0.4}"#);
    assert_eq!(gjsoq(&["stability", "--params", &path]).status.code(), Some(2));
    let path = write_params(dir.path(), TABLE1_JSON);
    let out = gjsoq(&["stability", "--params", &path, "--mu", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu"));
    assert_eq!(gjsoq(&["stability", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn inline_overrides_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_params(dir.path(), TABLE1_JSON);
    let out = gjsoq(&["stability", "--params", &path, "--mu", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let prov = &doc["provenance"];
    assert_eq!(prov["params"]["mu"].as_f64(), Some(0.5));
    assert_eq!(prov["params"]["lambda0"].as_f64(), Some(0.15));
    assert_eq!(prov["param_source"]["overrides"]["mu"].as_f64(), Some(0.5));
    assert_eq!(prov["param_source"]["file"].as_str(), Some(path.as_str()));
    assert!(prov["command_line"].as_str().unwrap().contains("--mu 0.5"));
    assert_eq!(prov["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
}

#[test]
fn decay_profile_and_table() {
    let out = gjsoq(&["decay"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(format!("{:.4}", r["profile"]["decay_rate"].as_f64().unwrap()), "0.5831");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tail.csv");
    let out = gjsoq(&[
        "decay", "--table", "m_max=30", "l_range=-5..5", "--format", "csv", "--out", file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&file).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "m,l,server,value");
    assert_eq!(body.len(), 1 + 31 * 11 * 2);
    assert!(text.starts_with("# tool: gjsoq\n"));
    assert!(text.contains("# params: "));
}

#[test]
fn weakly_pooled_decay_is_refused() {
    let out = gjsoq(&[
        "decay", "--lambda0", "0.02", "--lambda1", "0.12", "--lambda2", "0.02", "--alpha1", "0.4",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not strongly pooled"));
}

#[test]
fn approx_grid_and_ratio_curve() {
    let out = gjsoq(&["approx", "--n", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("i,j,server,value,regime_tag\n"));
    assert!(text.contains("outside_asymptotic_regime"));

    let out = gjsoq(&[
        "approx", "--lambda0", "0.04", "--lambda1", "0.01", "--lambda2", "0.01", "--alpha1", "0.25",
        "--alpha2", "0.25", "--ratio-curve", "60",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(r["evaluator"], "symmetric");
    let ratio = r["ratio_curve"][15]["ratio"].as_f64().unwrap();
    assert!((ratio - 0.1669).abs() < 5e-3);
}

#[test]
fn solve_outputs() {
    let out = gjsoq(&["solve", "--n-max", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert!((r["busy_fraction"].as_f64().unwrap() - 0.4772727).abs() < 1e-6);
    assert!(r["diagnostics"]["residual_norm"].as_f64().unwrap() < 1e-12);
    let out = gjsoq(&["solve", "--n-max", "4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("i,j,k,probability\n"));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--horizon", "2000", "--seed", "9", "--format", "csv"];
    let (a, b) = (gjsoq(&args), gjsoq(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("t,n1,n2,busy\n"));

    let out = gjsoq(&["simulate", "--horizon", "2000", "--scenario", "criterion2-unstable"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(r["scenario"]["regime_holds"], Value::Bool(true));
    assert_eq!(r["scenario"]["stable"], Value::Bool(false));
    assert!(r["rng"].as_str().unwrap().contains("ChaCha8"));

    assert_eq!(gjsoq(&["simulate", "--scenario", "nope"]).status.code(), Some(2));
    assert_eq!(gjsoq(&["simulate", "--horizon", "-1"]).status.code(), Some(2));
}

#[test]
fn validate_default_params_pass() {
    let out = gjsoq(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(r["passed"], Value::Bool(true));
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["check"].as_str().unwrap()).collect();
    assert_eq!(names, ["table1_relative", "table1_absolute", "table2_ratios", "oracle_decay"]);
}

#[test]
fn sweep_writes_one_file_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = gjsoq(&[
        "sweep", "--grid", "mu=0.4:0.6:3", "--grid", "alpha1=0.2,0.3", "--out-dir", out_dir.to_str().unwrap(),
        "--", "decay",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_result(&out);
    assert_eq!(r["points"], 6);
    assert_eq!(r["failed"], 0);
    let mut files: Vec<_> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files.len(), 6);
    let first: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("point_0000.json")).unwrap()).unwrap();
    assert_eq!(first["provenance"]["params"]["mu"].as_f64(), Some(0.4));
    assert_eq!(first["provenance"]["sweep_point"]["alpha1"].as_f64(), Some(0.2));

    let out = gjsoq(&["sweep", "--grid", "alpha1=0.01,0.2", "--out-dir", out_dir.to_str().unwrap(), "--", "decay"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_result(&out)["failed"], 1);

    let out = gjsoq(&["sweep", "--grid", "beta=1", "--out-dir", out_dir.to_str().unwrap(), "--", "decay"]);
    assert_eq!(out.status.code(), Some(2));
}
