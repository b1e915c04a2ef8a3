//! End-to-end tests of the command-line interface: exit codes, output
//! files, and bitwise determinism of exact-mode reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_poisson-vqa")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pvqa-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("POISSON_VQA_THREADS", "1")
        .output()
        .expect("binary runs")
}

const TOY_CONFIG: &str = r#"{
  "problem": {
    "d": 2, "n": 2,
    "bc": ["neumann", "dirichlet"],
    "rhs": {"type": "step_function"}
  },
  "ansatz_depth": 2,
  "mode": {"type": "exact"},
  "optimizer": {"restarts": 2, "max_iters": 200, "seed": 5}
}"#;

#[test]
fn solve_writes_report_solution_and_trace() {
    let dir = temp_dir("solve");
    let config = write_config(&dir, TOY_CONFIG);
    let out_dir = dir.join("out");
    let output = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert!(report["fidelity"].as_f64().unwrap() > 0.99);
    // Config echo carries materialized defaults.
    assert_eq!(report["config"]["optimizer"]["memory"], 10);
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "# d=2,n=2,bc=ND");
    assert_eq!(lines.next().unwrap(), "x1,x2,value");
    assert_eq!(csv.lines().count(), 2 + 16);
    assert!(out_dir.join("trace.jsonl").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exact_reports_are_bitwise_identical() {
    let dir = temp_dir("determinism");
    let config = write_config(&dir, TOY_CONFIG);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let a = std::fs::read(out_a.join("report.json")).unwrap();
    let b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_exit_2() {
    let dir = temp_dir("badcfg");
    let config = write_config(&dir, r#"{"problem": {"d": 7}}"#);
    let output = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    // Missing file is also a config error.
    let output = run(&["solve", "--config", dir.join("nope.json").to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn singular_spec_exits_3() {
    let dir = temp_dir("singular");
    let config = write_config(
        &dir,
        r#"{
          "problem": {"d": 1, "n": 2, "bc": ["neumann"], "rhs": {"type": "step_function"}},
          "ansatz_depth": 1,
          "mode": {"type": "exact"},
          "optimizer": {"restarts": 1, "max_iters": 5, "seed": 1}
        }"#,
    );
    let output = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn over_budget_exits_4() {
    let dir = temp_dir("budget");
    let config = write_config(
        &dir,
        r#"{
          "problem": {"d": 2, "n": 5, "bc": ["neumann", "dirichlet"],
                      "rhs": {"type": "step_function"}},
          "ansatz_depth": 1,
          "mode": {"type": "noisy", "p1": 1e-4, "p2": 1e-3},
          "optimizer": {"restarts": 1, "max_iters": 5, "seed": 1}
        }"#,
    );
    let output = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn plan_audit_counts_match() {
    let dir = temp_dir("audit");
    let out_dir = dir.join("out");
    let output = run(&[
        "plan-audit",
        "--d",
        "2",
        "--n",
        "4",
        "--bc",
        "DD",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let audit: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("plan_audit.json")).unwrap()).unwrap();
    assert_eq!(audit["expectation_circuits"], 4);
    assert_eq!(audit["squared_circuits"], 24);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn noise_bench_single_point_csv() {
    let dir = temp_dir("noise");
    let out_dir = dir.join("out");
    let output = run(&[
        "noise-bench",
        "--n",
        "2",
        "--p2-grid",
        "8e-3",
        "--trials",
        "1",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out_dir.join("noise_bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p2,scheme,mean_rel_error,stderr,trials");
    assert_eq!(lines.len(), 3); // one grid point, two schemes
    assert!(lines[1].starts_with("0.008,shift_operator,"));
    assert!(lines[2].starts_with("0.008,mcx_baseline,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sample_study_exact_sentinel() {
    let dir = temp_dir("study");
    let config = write_config(
        &dir,
        r#"{
          "problem": {"d": 1, "n": 2, "bc": ["dirichlet"], "rhs": {"type": "step_function"}},
          "ansatz_depth": 1,
          "mode": {"type": "shots", "shots": 16384, "seed": 3},
          "optimizer": {"restarts": 1, "max_iters": 120, "seed": 3}
        }"#,
    );
    let out_dir = dir.join("out");
    let output = run(&[
        "sample-study",
        "--config",
        config.to_str().unwrap(),
        "--shot-grid",
        "8192,exact",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(out_dir.join("sample_study.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "shots,fidelity,norm_rel_error,e_min");
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join(format!("shots-{}", u64::MAX)).join("report.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}
