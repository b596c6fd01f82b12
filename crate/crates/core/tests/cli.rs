use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FERMAT: &str = "poly n=2 d=3 field=7\n1 3 0 0\n1 0 3 0\n1 0 0 3\n";

fn incidence(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incidence")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fermat(dir: &Path) -> String {
    let path = dir.join("fermat.poly");
    fs::write(&path, FERMAT).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn enumerate_flexes_of_fermat_cubic() {
    let dir = tempfile::tempdir().unwrap();
    let poly = fermat(dir.path());
    let csv = dir.path().join("flags.csv");
    let out = incidence(&[
        "enumerate", "--field", "7", "--n", "2", "--poly", &poly, "--scheme", "Y", "--m", "3", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["count"], 9);
    assert_eq!(v["flags"].as_array().unwrap().len(), 9);
    assert!(v["runtime_ms"].is_u64());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert_eq!(text.lines().next(), Some("p,v"));
}

#[test]
fn enumerate_points_and_extension() {
    let dir = tempfile::tempdir().unwrap();
    let poly = fermat(dir.path());
    let v = json(&incidence(&["enumerate", "--field", "7", "--n", "2", "--poly", &poly, "--scheme", "x"]));
    assert_eq!(v["count"], 9);
    let out = incidence(&["enumerate", "--field", "7", "--n", "2", "--poly", &poly, "--scheme", "y", "--m", "1", "--ext-deg", "2"]);
    let v = json(&out);
    assert_eq!(v["field"], "7^2");
    let x2 = json(&incidence(&["enumerate", "--field", "7", "--n", "2", "--poly", &poly, "--scheme", "x", "--ext-deg", "2"]));
    assert_eq!(v["count"].as_u64().unwrap(), x2["count"].as_u64().unwrap() * 50);
}

#[test]
fn enumerate_rejects_mismatched_header() {
    let dir = tempfile::tempdir().unwrap();
    let poly = fermat(dir.path());
    let out = incidence(&["enumerate", "--field", "5", "--n", "2", "--poly", &poly, "--scheme", "x"]);
    assert_eq!(out.status.code(), Some(3));
    let out = incidence(&["enumerate", "--field", "7", "--n", "3", "--poly", &poly, "--scheme", "x"]);
    assert_eq!(out.status.code(), Some(3));
    let out = incidence(&["enumerate", "--field", "7", "--n", "2", "--poly", &poly, "--scheme", "y"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn smooth_single_and_all_flags() {
    let dir = tempfile::tempdir().unwrap();
    let poly = fermat(dir.path());
    let v = json(&incidence(&["smooth", "--poly", &poly, "--m", "3", "--flag", "1 6 0;0 0 1"]));
    assert_eq!(v["class"], "smooth");
    assert_eq!(v["rank"], 3);
    assert_eq!(v["multiplicity"], 3);
    assert_eq!(v["a_m_zero"], false);
    let w = json(&incidence(&["smooth", "--poly", &poly, "--m", "3", "--flag", "1,6,0;0,0,1"]));
    assert_eq!(w, v);
    let all = json(&incidence(&["smooth", "--poly", &poly, "--m", "3", "--all-flags"]));
    assert_eq!(all["count"], 9);
    assert_eq!(all["by_class"]["smooth"], 9);
    let off = json(&incidence(&["smooth", "--poly", &poly, "--m", "3", "--flag", "1 0 0;0 1 0"]));
    assert_eq!(off["class"], "not_in_y");
    assert_eq!(off["rank"], Value::Null);
    assert_eq!(incidence(&["smooth", "--poly", &poly, "--m", "3"]).status.code(), Some(3));
}

#[test]
fn predict_flexes() {
    let v = json(&incidence(&["predict", "--n", "2", "--d", "3", "--m", "3"]));
    assert_eq!(v["expected_dim"], 0);
    assert_eq!(v["count"], 9);
    let lines = json(&incidence(&["predict", "--n", "3", "--d", "3", "--m", "inf"]));
    assert_eq!(lines["expected_dim"], 1);
}

#[test]
fn verify_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let csv_path = dir.path().join("records.csv");
    let out = incidence(&[
        "verify", "double-count", "--out", out_path.to_str().unwrap(), "--csv", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["outcome"], "pass");
    assert!(fs::read_to_string(&csv_path).unwrap().starts_with("item,"));

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "samples": 3, "threshold": 1.0, "escalation_bound": 4, "ext_bound": 1, "field": "5" }"#).unwrap();
    let out = incidence(&["verify", "gensm-ii", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    let v = json(&out);
    assert_eq!(v["config"]["seed"], 1);
    assert_eq!(v["config"]["samples"], 3);
    let code = out.status.code().unwrap();
    assert_eq!(code, if v["outcome"] == "pass" { 0 } else { 1 });

    fs::write(&cfg, r#"{ "caps": { "max_flags": 10 } }"#).unwrap();
    let out = incidence(&["verify", "cubic-planted", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));

    fs::write(&cfg, r#"{ "caps": { "max_flags": 10 }, "threshold": 0.0 }"#).unwrap();
    let out = incidence(&["verify", "cubic-planted", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["outcome"], "undecided");

    assert_eq!(incidence(&["verify", "no-such-experiment"]).status.code(), Some(3));
    fs::write(&cfg, r#"{ "experiment": "fano-i" }"#).unwrap();
    assert_eq!(incidence(&["verify", "gensm-i", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}
