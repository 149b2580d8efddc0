use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const EXAMPLE: &str = "n=3\n# three equal amplitudes\n001 1\n011 1\n100 1\n";

fn grsparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grsparse"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_category(out: &Output) -> String {
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    err["error"]["category"].as_str().unwrap().to_string()
}

#[test]
fn prepare_and_simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "psi.txt", EXAMPLE);
    let circuit = dir.path().join("c.json");
    let report = json_stdout(&grsparse(&["prepare", &state, "--out", circuit.to_str().unwrap()]));
    assert_eq!(report["gates"], 4);
    let out = grsparse(&["simulate", circuit.to_str().unwrap(), "--target", &state]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let overlap: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("# overlap=")
        .unwrap()
        .parse()
        .unwrap();
    assert!((overlap - 1.0).abs() < 1e-12);
    assert!(text.contains("001 ") && text.contains("011 ") && text.contains("100 "));
}

#[test]
fn exact_optimization_costs_six() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "psi.txt", EXAMPLE);
    let report = json_stdout(&grsparse(&["--emit-log", "optimize-exact", &state]));
    assert_eq!(report["cost"]["total"], 6);
    let log = report["merge_log"].as_array().unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0]["kind"], "strip");
    assert_eq!(log[0]["before"][0], "01");
    assert_eq!(log[0]["after"], "e1");
    let layer2 = &report["circuit"]["layers"][2]["gates"];
    assert_eq!(layer2[0]["pattern"], "00");
    assert_eq!(layer2[1]["pattern"], "e1");
}

#[test]
fn log_is_omitted_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "psi.txt", EXAMPLE);
    let report = json_stdout(&grsparse(&["optimize-exact", &state]));
    assert!(report.get("merge_log").is_none());
}

#[test]
fn approximate_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(
        dir.path(),
        "psi.json",
        r#"{"n": 5, "entries": [[1, 0.3], [6, 0.5], [7, 0.45], [20, 0.2], [21, 0.6], [31, 0.1]]}"#,
    );
    let report = json_stdout(&grsparse(&[
        "--emit-log",
        "optimize-approx",
        &state,
        "--fmin",
        "0.9",
        "--intervals",
        "5",
    ]));
    let f_est = report["f_est"].as_f64().unwrap();
    let f_lb = report["f_lb"].as_f64().unwrap();
    let f_true = report["f_true"].as_f64().unwrap();
    assert!(f_est >= 0.9);
    assert!(f_true >= f_lb - 1e-10);
    assert!(report["cost"]["total"].as_u64().unwrap() <= report["exact_cost"]["total"].as_u64().unwrap());
    assert!(report["accepted_merges"].is_array());

    let exact = json_stdout(&grsparse(&["optimize-approx", &state, "--fmin", "1"]));
    assert_eq!(exact["f_est"].as_f64().unwrap(), 1.0);
    assert_eq!(exact["cost"], exact["exact_cost"]);
}

#[test]
fn experiment_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let args = [
            "experiment",
            "approx_vs_exact",
            "--n",
            "9",
            "--sparsity",
            "0.02,0.05",
            "--fmin",
            "0.9",
            "--intervals",
            "10",
            "--reps",
            "2",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ];
        assert!(grsparse(&args).status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# grsparse experiment csv v1"));
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "experiment,n,sparsity,d,fmin,intervals,reps,metric,mean,min,max"
    );
}

#[test]
fn errors_are_categorized() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "n=2\n01 -1\n");
    assert_eq!(error_category(&grsparse(&["prepare", &bad])), "invalid-state");
    let garbled = write(dir.path(), "garbled.txt", "hello\n");
    assert_eq!(error_category(&grsparse(&["prepare", &garbled])), "parse");
    let missing = dir.path().join("missing.txt");
    assert_eq!(error_category(&grsparse(&["prepare", missing.to_str().unwrap()])), "io");
    let state = write(dir.path(), "psi.txt", EXAMPLE);
    assert_eq!(
        error_category(&grsparse(&["optimize-approx", &state, "--fmin", "0"])),
        "invalid-config"
    );
    assert_eq!(error_category(&grsparse(&["experiment", "fig9"])), "invalid-config");
    let overlap = write(
        dir.path(),
        "overlap.json",
        r#"{"n": 2, "layers": [{"k": 1, "gates": [{"pattern": "e", "theta": 1.0}, {"pattern": "0", "theta": 1.0}]}]}"#,
    );
    assert_eq!(error_category(&grsparse(&["simulate", &overlap])), "invalid-circuit");
    let circuit = dir.path().join("c.json");
    assert!(grsparse(&["prepare", &state, "--out", circuit.to_str().unwrap()])
        .status
        .success());
    let other = write(dir.path(), "other.txt", "n=2\n01 1\n");
    let out = grsparse(&["simulate", circuit.to_str().unwrap(), "--target", &other]);
    assert_eq!(error_category(&out), "dimension-mismatch");
    assert_eq!(out.status.code(), Some(8));
}
