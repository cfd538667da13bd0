//! End-to-end tests of the `bellvar` binary: spec'd example invocations,
//! exit codes, round trips, and file output.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bellvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = bellvar(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bellvar-cli-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name)
}

#[test]
fn optimize_reaches_the_mems_witness() {
    let out = run_json(&["optimize", "--family", "mems", "--gamma", "0.5"]);
    let b_max = out["result"]["b_max"].as_f64().unwrap();
    let witness = 2.0 * 1.25f64.sqrt();
    assert!(
        b_max >= witness - 1e-6,
        "b_max {b_max} vs witness {witness}"
    );
    assert_eq!(out["result"]["report"]["violated"], Value::Bool(true));
    // the seed is echoed through the config block
    assert!(out["config"]["rng_seed"].is_u64());
}

#[test]
fn concurrence_of_the_separable_family_is_zero() {
    let out = run_json(&["concurrence", "--family", "separable", "--x", "0.2"]);
    let c = out["concurrence"].as_f64().unwrap();
    assert!(c.abs() <= 1e-10, "concurrence {c}");
}

#[test]
fn eval_reproduces_the_werner_witness() {
    let out = run_json(&[
        "eval",
        "--family",
        "werner",
        "--gamma",
        "0.2",
        "--xi",
        "0.7853981633974483",
        "--angles",
        "1.5707963,0.1973955,-0.1973955,0",
    ]);
    let b_value = out["b_value"].as_f64().unwrap();
    let expect = 2.0 * 1.04f64.sqrt();
    assert!(
        (b_value - expect).abs() <= 1e-9,
        "b_value {b_value} vs {expect}"
    );
}

#[test]
fn optimal_angles_round_trip_through_eval() {
    let found = run_json(&[
        "optimize",
        "--family",
        "separable",
        "--x",
        "0.15",
        "--decomposition",
        "bell",
    ]);
    let b_max = found["result"]["b_max"].as_f64().unwrap();
    let settings = &found["result"]["optimal_settings"];
    let angles: Vec<String> = ["a", "b", "c", "d"]
        .iter()
        .map(|k| format!("{:?}", settings[*k]["theta"].as_f64().unwrap()))
        .collect();
    let replayed = run_json(&[
        "eval",
        "--family",
        "separable",
        "--x",
        "0.15",
        "--decomposition",
        "bell",
        "--angles",
        &angles.join(","),
    ]);
    let b_value = replayed["b_value"].as_f64().unwrap();
    assert!(
        (b_value - b_max).abs() <= 1e-12,
        "replayed {b_value} vs optimized {b_max}"
    );
}

#[test]
fn usage_errors_exit_with_two() {
    // required parameter missing for the family
    let out = bellvar(&["eval", "--family", "mems", "--angles", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    // both sources at once
    let out = bellvar(&[
        "concurrence",
        "--family",
        "mems",
        "--gamma",
        "0.5",
        "--input",
        "x.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // wrong angle arity
    let out = bellvar(&[
        "eval", "--family", "mems", "--gamma", "0.5", "--angles", "1,2,3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // unknown subcommand
    let out = bellvar(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_one() {
    let out = bellvar(&["optimize", "--family", "mems", "--gamma", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gamma"), "stderr: {stderr}");

    let out = bellvar(&["validate", "--input", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_distinguishes_pass_from_fail() {
    let root = 0.5f64.sqrt();
    let good = temp_path("good.json");
    fs::write(
        &good,
        format!(
            r#"{{"terms":[{{"weight":1.0,"amplitudes":[[{root},0],[0,0],[0,0],[{root},0]]}}]}}"#
        ),
    )
    .unwrap();
    let out = bellvar(&["validate", "--input", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));

    let bad = temp_path("bad.json");
    fs::write(
        &bad,
        format!(
            r#"{{"terms":[{{"weight":0.6,"amplitudes":[[{root},0],[0,0],[0,0],[{root},0]]}},
                         {{"weight":0.6,"amplitudes":[[0,0],[1,0],[0,0],[0,0]]}}]}}"#
        ),
    )
    .unwrap();
    let out = bellvar(&["validate", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], Value::Bool(false));
}

#[test]
fn sweep_preset_writes_the_expected_csv() {
    let csv = temp_path("fig1a.csv");
    let out = bellvar(&["sweep", "--preset", "fig1a", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "CSV run should not print rows");
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "preset,gamma,b_max,bound,violated,theta_a,theta_b,theta_c,theta_d,evaluations"
    );
    assert_eq!(lines.len(), 21);
    for line in &lines[1..] {
        assert!(line.starts_with("fig1a,"));
        assert!(line.contains(",true,"), "every row violated: {line}");
    }
}

#[test]
fn sample_is_seeded_and_statistically_sound() {
    let args = [
        "sample", "--family", "werner", "--gamma", "0.8", "--angles", "0.3,1.1", "--trials",
        "200000", "--seed", "5",
    ];
    let first = bellvar(&args);
    let second = bellvar(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same seed, same output");

    let out: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(out["seed"].as_u64(), Some(5));
    let mean = out["estimate"]["mean"].as_f64().unwrap();
    let se = out["estimate"]["std_error"].as_f64().unwrap();
    let analytic = out["analytic"].as_f64().unwrap();
    assert!(
        (mean - analytic).abs() <= 5.0 * se,
        "mean {mean} vs {analytic} (se {se})"
    );
}
