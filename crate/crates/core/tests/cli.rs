use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langevin-sgd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// n = 100 evenly spread centers on [-0.99, 0.99]; κ = 1, p = 1.
fn isotropic_config(dir: &Path, extra: &str) -> String {
    let centers: Vec<String> = (0..100).map(|i| format!("[{}]", (i as f64 - 49.5) / 50.0)).collect();
    let body = format!(
        r#"{{"target": {{"kind": "isotropic_gaussian", "p": 1, "n": 100, "m_g": 1.0, "centers": [{}]}}{extra}}}"#,
        centers.join(",")
    );
    write_config(dir, "config.json", &body)
}

#[test]
fn plan_reports_first_order_schedule() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), "");
    let out = bin(&["plan", "--config", &config, "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json_of(&out);
    let best = &report["best"];
    assert_eq!(best["theorem"], "sgd_first_order");
    assert!((best["h"].as_f64().unwrap() - 2.5e-3).abs() < 1e-15);
    assert_eq!(best["b"], 11);
    assert!((best["budget_bound"].as_f64().unwrap() - 205.0).abs() < 1.0);
    for key in ["theorem", "h", "h_eff", "b", "K", "budget", "epsilon", "conditions"] {
        assert!(!best[key].is_null(), "missing {key}");
    }
    for c in best["conditions"].as_array().unwrap() {
        for key in ["name", "lhs", "rhs", "pass"] {
            assert!(!c[key].is_null());
        }
    }
}

#[test]
fn plan_below_window_names_failed_condition() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), "");
    let out = bin(&["plan", "--config", &config, "--eps", "0.02"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ε ≥ 3κ√p/n"), "{text}");
    let report = json_of(&out);
    let failed: Vec<&Value> = report["plans"][0]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "ε ≥ 3κ√p/n");
}

#[test]
fn second_order_without_lipschitz_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"target": {"kind": "isotropic_gaussian", "p": 1, "n": 100, "m_g": 1.0,
             "centers": {"seed": 3}, "hessian_lipschitz": "none"}, "epsilon": 0.1}"#,
    );
    let out = bin(&["plan", "--config", &config, "--theorem", "second-order"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("unsupported-target"));
}

#[test]
fn zero_steps_returns_start() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), r#", "theta0": [0.3125]"#);
    let out_dir = dir.path().join("out");
    let out = bin(&[
        "sample", "--config", &config, "--h", "0.001", "--k", "0", "--chains", "1",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("samples.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row, "0,0,3.1250000000000000e-1");
    let value: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(value, 0.3125);
}

#[test]
fn sampling_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(
        dir.path(),
        r#", "epsilon": 0.1, "chains": 64, "seed": 9, "checkpoints": [0, 3, 7], "sampler": "sgd_minibatch""#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = bin(&["sample", "--config", &config, "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["samples.csv", "trajectory.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let c = dir.path().join("c");
    bin(&["sample", "--config", &config, "--seed", "10", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(a.join("samples.csv")).unwrap(), fs::read(c.join("samples.csv")).unwrap());
    let trajectory = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 1 + 64 * 3);
}

#[test]
fn planned_sampling_reaches_epsilon() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), r#", "epsilon": 0.1, "chains": 2000, "seed": 1, "theta0": [0.5]"#);
    let out_dir = dir.path().join("out");
    let out = bin(&["sample", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let last = &summary["final"];
    assert!(last["w2_exact"].as_f64().unwrap() <= 0.1);
    assert!(last["w2_empirical"].as_f64().unwrap() <= 0.15);
    assert_eq!(summary["partial"], false);
    assert_eq!(fs::read_to_string(out_dir.join("samples.csv")).unwrap().lines().count(), 2001);
    assert!(!out_dir.join("trajectory.csv").exists());
}

#[test]
fn numeric_failure_exits_3_with_partial_outputs() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), r#", "theta0": [1e307]"#);
    let out_dir = dir.path().join("out");
    let out = bin(&[
        "sample", "--config", &config, "--h", "0.001", "--k", "5", "--chains", "3",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["partial"], true);
    assert_eq!(summary["failed_chains"].as_array().unwrap().len(), 3);
}

#[test]
fn ridge_design_from_csv_with_header() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("x.csv"), "x1\n1\n1\n").unwrap();
    fs::write(dir.path().join("y.csv"), "0\n2\n").unwrap();
    let config = write_config(
        dir.path(),
        "ridge.json",
        r#"{"target": {"kind": "ridge", "design_csv": "x.csv", "responses_csv": "y.csv", "lambda": 1.0},
            "theta0": [0.0], "h": 0.01, "K": 0}"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin(&["sample", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = json_of(&out);
    assert!((summary["stationary"]["mean"][0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((summary["stationary"]["cov"][0][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn bound_branch_self_check_at_split() {
    let out = bin(&["bound", "--theorem", "first-order", "--h", "0.8", "--k", "4", "--m", "1", "--smoothness", "1.5", "--dim", "2", "--w0", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["branch_check"]["agree"], true);
    for term in ["initial_term", "discretization_term", "hessian_term", "total"] {
        assert!(report["bound"][term].is_number());
    }
}

#[test]
fn bound_examples() {
    let out = bin(&["bound", "--theorem", "first-order", "--h", "0.1", "--k", "3", "--m", "1", "--smoothness", "2", "--dim", "4", "--w0", "0"]);
    let total = json_of(&out)["bound"]["total"].as_f64().unwrap();
    assert!((total - 1.65 * 2.0 * 0.4f64.sqrt()).abs() < 1e-14);

    let out = bin(&["bound", "--theorem", "second-order", "--h", "0.1", "--k", "7", "--m", "1", "--smoothness", "1", "--hessian-lipschitz", "0", "--dim", "1", "--w0", "0"]);
    let report = json_of(&out);
    assert_eq!(report["bound"]["hessian_term"], 0.0);
    assert!((report["bound"]["total"].as_f64().unwrap() - 0.22).abs() < 1e-12);

    let out = bin(&["bound", "--h", "0.1", "--k", "7", "--m", "2", "--smoothness", "2", "--dim", "3", "--f0", "4"]);
    let report = json_of(&out);
    assert_eq!(report["w0_source"], "upper_bound_from_f0");
    let w0 = (3.0f64 / 2.0).sqrt() + (2.0f64 * 4.0 / 2.0).sqrt();
    assert!((report["w0"].as_f64().unwrap() - w0).abs() < 1e-12);

    let out = bin(&["bound", "--h", "2.5", "--k", "1", "--m", "1", "--smoothness", "1", "--dim", "1", "--w0", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let out = bin(&["verify", "variance", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["pass"], true);
    assert!(report["results"][0]["value"].as_f64().unwrap() < 1e-10);
    for suite in ["metric", "bound-validity", "minibatch", "equivalence", "chain-law"] {
        assert_eq!(bin(&["verify", suite]).status.code(), Some(0), "{suite}");
    }
    assert_eq!(bin(&["verify", "bogus"]).status.code(), Some(2));
}

#[test]
fn missing_parameters_are_rejected() {
    let dir = TempDir::new().unwrap();
    let config = isotropic_config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = bin(&["sample", "--config", &config, "--h", "0.01", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(bin(&["plan", "--eps", "0.1"]).status.code(), Some(2));
    assert_eq!(bin(&["plan", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}
