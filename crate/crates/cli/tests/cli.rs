use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polya(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polya"))
        .args(args)
        .current_dir(dir)
        .env("POLYA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str], dir: &Path) -> Value {
    let out = polya(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error is JSON")
}

#[test]
fn freezing_model_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = polya(&["model", "freezing", "--K", "1", "--p", "0.75", "-o", "f.json"], dir.path());
    assert!(out.status.success());
    let doc = ok_json(&["analyze", "f.json"], dir.path());
    assert_eq!(doc["format_version"], "polya-urn/1");
    assert_eq!(doc["config"]["command"], "analyze");
    let report = &doc["report"];
    assert_eq!(report["classification"], "StrictlySmall");
    assert!((report["lambda1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let v1: Vec<f64> = report["v1"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in v1.iter().zip([0.5, 0.25, 0.5, 0.25]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(report["eigenvalues"][0].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_second_step_mean() {
    let dir = tempfile::tempdir().unwrap();
    polya(&["model", "freezing", "--K", "1", "--p", "0.75", "-o", "f.json"], dir.path());
    let doc = ok_json(&["oracle", "f.json", "--n", "2"], dir.path());
    let mean: Vec<f64> = doc["report"]["conditional_mean"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(mean, [1.25, 0.125, 1.25, 0.125]);
}

#[test]
fn simulate_is_reproducible_and_expands_pow2() {
    let dir = tempfile::tempdir().unwrap();
    let args = |threads: &'static str, out: &'static str| {
        vec![
            "simulate", "builtin:freezing-K1-p0.75", "--n", "300", "--reps", "200", "--seed", "7",
            "--checkpoints", "pow2", "--threads", threads, "-o", out,
        ]
    };
    let first = polya(&args("1", "a.csv"), dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let stderr = String::from_utf8_lossy(&first.stderr);
    assert!(stderr.contains("\"checkpoints\":[64,128,256,300]"), "{stderr}");
    assert!(polya(&args("4", "b.csv"), dir.path()).status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    let strip = |bytes: &[u8]| -> String {
        String::from_utf8_lossy(bytes)
            .lines()
            .filter(|l| !l.starts_with("# config:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(polya(&args("1", "a.csv"), dir.path()).status.success());
    assert!(a == std::fs::read(dir.path().join("a.csv")).unwrap());
}

#[test]
fn estimate_writes_report_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let sim = polya(
        &["simulate", "builtin:cyclic3", "--n", "128", "--reps", "300", "--checkpoints", "16,128", "-o", "e.csv"],
        dir.path(),
    );
    assert!(sim.status.success());
    let out = polya(
        &["estimate", "e.csv", "--p", "2,4", "--stats-csv", "s.csv", "-o", "r.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(stats.lines().next(), Some("n,stat,coord,value,stderr"));
    let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(doc["kind"], "estimator_report");
    assert_eq!(doc["config"]["source_config"]["command"], "simulate");
    let cps = doc["report"]["estimator"]["checkpoints"].as_array().unwrap();
    assert_eq!(cps.len(), 2);
    assert_eq!(cps[1]["survivors"], 300);
    let first = std::fs::read(dir.path().join("r.json")).unwrap();
    polya(&["estimate", "e.csv", "--p", "2,4", "-o", "r.json"], dir.path());
    let again = std::fs::read(dir.path().join("r.json")).unwrap();
    assert_eq!(
        serde_json::from_slice::<Value>(&first).unwrap()["report"],
        serde_json::from_slice::<Value>(&again).unwrap()["report"]
    );
}

#[test]
fn estimate_without_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = polya(&["estimate", "--p", "2,4", "missing-input"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "UsageError");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "spec = \"builtin:polya\"\nn = 20\nreps = 10\nseed = 3\ncheckpoints = [5, 20]\n",
    )
    .unwrap();
    let out = polya(&["simulate", "--config", "run.toml", "--reps", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("# reps: 4"));
    assert!(csv.contains("# seed: 3"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("20,")).count(), 4);

    std::fs::write(dir.path().join("bad.toml"), "reps = 10\nunknown_key = 1\n").unwrap();
    let out = polya(&["simulate", "builtin:polya", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(error_json(&out)["message"].as_str().unwrap().contains("unknown_key"));
}

#[test]
fn invalid_specs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"name\": \"x\"}").unwrap();
    let out = polya(&["analyze", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "MalformedSpec");

    let unbalanced = r#"{"name": "u", "q": 2, "activities": [1, 1], "initial": [1, 1],
        "replacements": [[{"prob": 1, "delta": [1, 0]}], [{"prob": 1, "delta": [0, 2]}]]}"#;
    std::fs::write(dir.path().join("u.json"), unbalanced).unwrap();
    let out = polya(&["analyze", "u.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "NotBalancedInExpectation");
}

#[test]
fn audit_of_polya_has_no_noise() {
    let dir = tempfile::tempdir().unwrap();
    let doc = ok_json(&["audit", "builtin:polya", "--n", "50", "--reps", "10"], dir.path());
    let report = &doc["report"];
    assert_eq!(report["decomposition"]["max_abs_z"].as_f64(), Some(0.0));
    assert!(report["decomposition"]["max_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["martingale"]["trajectories"], 10);
}

#[test]
fn hooking_triangle_increments() {
    let dir = tempfile::tempdir().unwrap();
    let doc = ok_json(
        &["model", "hooking", "builtin:triangle", "--n", "200", "--reps", "5", "--checkpoints", "100,200"],
        dir.path(),
    );
    let report = &doc["report"];
    assert_eq!(report["b"].as_f64(), Some(8.0));
    assert_eq!(report["increment_min"].as_f64(), Some(8.0));
    assert_eq!(report["increment_max"].as_f64(), Some(8.0));
}

#[test]
fn verify_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = polya(&["verify", "--suite", "core", "--budget", "ci", "--only", "1,2,3", "-o", "v.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 3);
    let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(doc["kind"], "acceptance_report");

    let out = polya(&["verify", "--budget", "weekly"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
