use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wirecut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wirecut"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generate(dir: &Path) -> String {
    let path = dir.join("adder.json");
    let out = wirecut(&["gen", "--kind", "adder", "--n", "6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_reports_configuration_counts() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = generate(dir.path());
    let out = wirecut(&["validate", "--circuit", &circuit]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["num_cuts"], 2);
    assert_eq!(v["schemes"]["L4_PRESET"]["num_configurations"], 24);
    assert!(v["schemes"]["L8_PRESET"]["table_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn run_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = generate(dir.path());
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = wirecut(&["run", "--circuit", &circuit, "--preset", "B", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(v["schema_version"], 1);
    let shots: u64 = v["shots_per_configuration"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).sum();
    assert_eq!(shots, 24_000);
    assert_eq!(v["stages"].as_array().unwrap().len(), 6);
    let p: f64 = v["distribution_clamped"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((p - 1.0).abs() < 1e-9);
}

#[test]
fn exact_run_recovers_the_sum() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = generate(dir.path());
    let out = wirecut(&["run", "--circuit", &circuit, "--preset", "A", "--exact"]);
    assert!(out.status.success());
    let v = json(&out);
    let p = v["distribution_raw"].as_array().unwrap();
    let doc = wirecut::circuit::parse_document(&std::fs::read_to_string(&circuit).unwrap()).unwrap();
    let truth = wirecut::simulator::simulate_circuit(&doc.circuit());
    for (x, t) in p.iter().zip(&truth) {
        assert!((x.as_f64().unwrap() - t).abs() < 1e-9);
    }
    // a classical adder has a single outcome
    assert_eq!(truth.iter().filter(|&&t| t > 0.5).count(), 1);
}

#[test]
fn evaluate_compares_presets() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = generate(dir.path());
    let out = wirecut(&["evaluate", "--circuit", &circuit, "--reps", "4", "--compare", "baseline", "--shots", "4800"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["repetitions"], 4);
    assert_eq!(v["comparison"]["preset"], "baseline");
    assert!(v["empirical_err"].as_f64().unwrap() >= 0.0);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(wirecut(&["run", "--circuit", missing.to_str().unwrap()]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"num_qubits\": 2, \"gates\": [{\"name\": \"foo\", \"qubits\": [0]}]}").unwrap();
    let out = wirecut(&["validate", "--circuit", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));

    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(wirecut(&["validate", "--circuit", bad.to_str().unwrap()]).status.code(), Some(1));

    let circuit = generate(dir.path());
    assert_eq!(wirecut(&["run", "--circuit", &circuit, "--preset", "Z"]).status.code(), Some(1));
    assert_eq!(wirecut(&["run", "--circuit", &circuit, "--prior-ratio", "1.5"]).status.code(), Some(1));
    assert_eq!(wirecut(&["evaluate", "--circuit", &circuit, "--reps", "1"]).status.code(), Some(1));
    assert_eq!(wirecut(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(wirecut(&["--help"]).status.code(), Some(0));
}
