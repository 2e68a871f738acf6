use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str, content: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("qlab-cli-test-{}-{name}", std::process::id()));
    std::fs::write(&p, content).unwrap();
    p
}

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_json(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["exit_code"], code);
    v
}

#[test]
fn entropy_of_diagonal_pair() {
    let out = qlab(&["entropy", "--f", "xlogx", "--rho", &fixture("rho_half.json"), "--sigma", &fixture("sigma_skew.json")]);
    let v = stdout_json(&out);
    // 0.5 ln(0.5/0.75) + 0.5 ln(0.5/0.25)
    let expect = 0.5 * (2.0f64 / 3.0).ln() + 0.5 * 2.0f64.ln();
    assert!((v["value"].as_f64().unwrap() - expect).abs() < 1e-12);
    assert_eq!(v["decomposition_valid"], true);
}

#[test]
fn detect_reports_both_forms() {
    let v = stdout_json(&qlab(&["detect", "--channel", &fixture("tensor_embed.json")]));
    assert_eq!(v["form"], "tensor-embed");
    let v = stdout_json(&qlab(&["detect", "--channel", &fixture("embed_partial_trace.json")]));
    assert_eq!(v["form"], "embed-partial-trace");
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("qlab-cli-test-{}-out.csv", std::process::id()));
    let out = qlab(&[
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
        "sweep",
        "--kind",
        "convexity",
        "--n",
        "4",
        "--dim",
        "2",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("# qlab-report v1\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("summary,")).count(), 1);
    let _ = std::fs::remove_file(path);
}

#[test]
fn missing_file_is_io_error() {
    let out = qlab(&["entropy", "--f", "xlogx", "--rho", "/nonexistent/rho.json", "--sigma", &fixture("sigma_skew.json")]);
    assert_eq!(error_json(&out, 1)["error"], "Io");
}

#[test]
fn bad_input_is_validation_error() {
    let out = qlab(&["entropy", "--f", "nope", "--rho", &fixture("rho_half.json"), "--sigma", &fixture("sigma_skew.json")]);
    assert_eq!(error_json(&out, 2)["error"], "UnknownName");
    let out = qlab(&["detect", "--channel", &fixture("embed_partial_trace.json"), "--sigma", &fixture("sigma_skew.json")]);
    assert_eq!(error_json(&out, 2)["error"], "DimensionMismatch");
    let out = qlab(&["--format", "csv", "entropy", "--f", "xlogx", "--rho", &fixture("rho_half.json"), "--sigma", &fixture("sigma_skew.json")]);
    error_json(&out, 2);
}

#[test]
fn unmet_hypothesis_exit_code() {
    let pin = scratch("pinching.json", r#"{"channel":{"named":"pinching","dims":[3]}}"#);
    let out = qlab(&["detect", "--channel", pin.to_str().unwrap()]);
    assert_eq!(error_json(&out, 3)["error"], "NotFullMultiplicativeDomain");
    let tr = scratch("transpose.json", r#"{"channel":{"named":"transpose","dims":[2]}}"#);
    let out = qlab(&["detect", "--channel", tr.to_str().unwrap(), "--sigma", &fixture("sigma_skew.json")]);
    assert_eq!(error_json(&out, 3)["error"], "HypothesisViolated");
    let _ = std::fs::remove_file(pin);
    let _ = std::fs::remove_file(tr);
}

#[test]
fn quadrature_failure_is_numerical() {
    let s = fixture("sigma_skew.json");
    let out = qlab(&[
        "--quad-rel-tol",
        "1e-300",
        "metric",
        "--h",
        "power:0.5",
        "--rho",
        &fixture("rho_half.json"),
        "--sigma",
        &s,
        "--x",
        &s,
        "--quadrature",
    ]);
    assert_eq!(error_json(&out, 4)["error"], "QuadratureFailure");
}

#[test]
fn examples_succeed() {
    for name in ["entangled", "pure-state", "qubit", "composite"] {
        let v = stdout_json(&qlab(&["--seed", "7", "examples", name]));
        assert!(v["assertions"].as_array().unwrap().iter().all(|a| a["holds"] == true), "{name}");
    }
}

#[test]
fn battery_from_separate_files_matches_instance_file() {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(fixture("qubit.json")).unwrap()).unwrap();
    let part = |key: &str| scratch(&format!("qubit-{key}.json"), &doc[key].to_string());
    let (c, r, s, k) = (part("channel"), part("rho"), part("sigma"), part("K"));
    let split = qlab(&[
        "battery",
        "--channel",
        c.to_str().unwrap(),
        "--rho",
        r.to_str().unwrap(),
        "--sigma",
        s.to_str().unwrap(),
        "--K",
        k.to_str().unwrap(),
    ]);
    let whole = qlab(&["battery", "--input", &fixture("qubit.json")]);
    assert_eq!(stdout_json(&split), stdout_json(&whole));
    for p in [c, r, s, k] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn usage_errors_are_json() {
    let out = qlab(&["battery", "--rho", &fixture("rho_half.json")]);
    assert_eq!(error_json(&out, 2)["error"], "Usage");
    let out = qlab(&["sweep", "--kind", "dpi", "--n", "many"]);
    error_json(&out, 2);
}

#[test]
fn superop_channel_with_declared_dims() {
    let id4 = r#"{"rows": 4, "cols": 4, "data": [[1,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}"#;
    let ch = scratch(
        "identity-superop.json",
        &format!(r#"{{"channel": {{"kind": "superop", "matrix": {id4}, "dims": [2, 2], "convention": "column-stacking"}}}}"#),
    );
    let v = stdout_json(&qlab(&["detect", "--channel", ch.to_str().unwrap()]));
    assert_eq!(v["form"], "embed-partial-trace");
    assert_eq!(v["dims"], serde_json::json!([2, 1]));
    let _ = std::fs::remove_file(ch);
}
