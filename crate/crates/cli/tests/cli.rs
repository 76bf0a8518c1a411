use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dicke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Data rows of a CSV document, skipping `#` comments and the header.
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_reduced_reports_drift() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("traj.csv");
    let out = dicke(&[
        "simulate",
        "--system",
        "reduced",
        "--k",
        "0.8",
        "--t-end",
        "2.0",
        "--out",
        path_str(&file),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("# config: "));
    assert_eq!(text.lines().nth(1).unwrap(), "t,sx,sy,sz,H_lmg,spin_norm2");
    let rows = csv_rows(&text);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!((rows.last().unwrap()[0] - 2.0).abs() < 1e-12);

    let summary = stdout(&out);
    let drift: f64 = summary
        .split("spin_norm_drift = ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift < 1e-8, "{summary}");
}

#[test]
fn subcritical_coupling_is_rejected_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("traj.csv");
    let out = dicke(&[
        "simulate",
        "--system",
        "full",
        "--lambda",
        "0.05",
        "--k",
        "0.8",
        "--out",
        path_str(&file),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("lambda_c"), "{}", stderr(&out));
    assert!(!file.exists());
}

#[test]
fn qphi_requires_dicke_case() {
    let out = dicke(&[
        "simulate",
        "--system",
        "qphi",
        "--epsilon",
        "-0.5",
        "--k",
        "0.8",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("epsilon = -1"));
    assert!(out.stdout.is_empty());
}

#[test]
fn simulate_needs_an_initial_condition() {
    assert_eq!(code(&dicke(&["simulate"])), 1);
    assert_eq!(
        code(&dicke(&["simulate", "--k", "0.8", "--init", "0,0,50"])),
        1
    );
    assert_eq!(
        code(&dicke(&[
            "simulate", "--system", "full", "--init", "0,0,50"
        ])),
        1
    );
}

#[test]
fn simulate_explicit_full_state_as_json() {
    let out = dicke(&[
        "simulate",
        "--system",
        "full",
        "--init",
        "1,0,0,0,50",
        "--t-end",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["run"]["system"], "full");
    assert_eq!(v["trajectory"]["times"].as_array().unwrap().len(), 1001);
    assert!(v["drift"]["energy"].as_f64().unwrap() < 1e-8);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for f in [&a, &b] {
        let out = dicke(&[
            "simulate",
            "--k",
            "1.2",
            "--system",
            "full",
            "--out",
            path_str(f),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"model": {"lambda": 0.6, "N": 200}, "run": {"k": [0.7], "samples": 10}}"#,
    )
    .unwrap();
    let out = dicke(&[
        "battery",
        "--config",
        path_str(&cfg),
        "--N",
        "400",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let model = &v["config"]["model"];
    assert_eq!(model["lambda"], 0.6);
    assert_eq!(model["N"], 400);
    assert_eq!(v["config"]["run"]["k"], serde_json::json!([0.7]));
    assert_eq!(v["curves"][0]["samples"].as_array().unwrap().len(), 11);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"model": {"lamda": 0.6}}"#).unwrap();
    assert_eq!(code(&dicke(&["battery", "--config", path_str(&cfg)])), 1);
    assert_eq!(
        code(&dicke(&["battery", "--config", "/nonexistent/x.json"])),
        1
    );
}

#[test]
fn unwritable_output_is_a_config_error() {
    let out = dicke(&["battery", "--out", "/nonexistent/dir/curve.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn potential_vanishes_at_origin() {
    let out = dicke(&["potential", "--k", "0.5,1.2", "--samples", "10"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().nth(1).unwrap(), "k,sx,U,C");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 22);
    let origin: Vec<_> = rows.iter().filter(|r| r[1] == 0.0).collect();
    assert_eq!(origin.len(), 2);
    assert!(origin.iter().all(|r| r[2] == 0.0));
    assert!(rows.iter().all(|r| r[1].abs() <= 50.0));
}

#[test]
fn battery_curves_start_discharged() {
    let out = dicke(&["battery", "--k", "0.5,0.8,1.0,1.2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 4);
    for c in curves {
        let e_max = c["e_max"].as_f64().unwrap();
        let first = c["samples"][0]["E_B"].as_f64().unwrap();
        assert!(first.abs() <= 1e-12 * e_max);
    }
    // The separatrix curve rises monotonically without oscillating.
    let sep = &curves[2];
    assert!(sep["period"].is_null());
    let energies: Vec<f64> = sep["samples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["E_B"].as_f64().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] >= w[0]));
    let e_max = sep["e_max"].as_f64().unwrap();
    assert!(*energies.last().unwrap() < e_max);
    assert!(*energies.last().unwrap() > 0.999 * e_max);
}

#[test]
fn infeasible_modulus_keeps_other_curves() {
    // k⁴ overflows, so the frequency equation has no usable root.
    let out = dicke(&[
        "battery",
        "--k",
        "0.5,1e200",
        "--samples",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["curves"].as_array().unwrap().len(), 1);
    assert_eq!(v["curves"][0]["k"], 0.5);
    assert_eq!(v["errors"][0]["k"], 1e200);
    assert!(stderr(&out).contains("warning: k = 1e200"));
}

#[test]
fn scaling_default_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scaling.json");
    let out = dicke(&["scaling", "--out", path_str(&file)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["mode"], "fixed_lambda");
    assert_eq!(v["entries"].as_array().unwrap().len(), 6);
    let p_avg = v["fits"]["p_avg"]["exponent"].as_f64().unwrap();
    let t_c = v["fits"]["t_c"]["exponent"].as_f64().unwrap();
    assert!((p_avg - 1.5).abs() < 0.05);
    assert!((t_c + 0.5).abs() < 0.05);
    assert!(v["fits"]["t_c"]["r2"].as_f64().unwrap() >= 0.999);
    assert!(stdout(&out).contains("exponent p_avg"));
}

#[test]
fn scaling_rejects_odd_n_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scaling.json");
    let out = dicke(&[
        "scaling",
        "--n-values",
        "100,201,400,800,1600,3200",
        "--out",
        path_str(&file),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!file.exists());
}

#[test]
fn scaling_deduplicates_with_warning() {
    let out = dicke(&[
        "scaling",
        "--n-values",
        "100,200,200,400,800,1600,3200",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("duplicate"));
    assert_eq!(csv_rows(&stdout(&out)).len(), 6);
}

#[test]
fn scaling_lists_failed_points() {
    let out = dicke(&["scaling", "--lambda", "0.02"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("N = 100") && err.contains("N = 400"), "{err}");
}

#[test]
fn validate_passes_by_default() {
    let out = dicke(&["validate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        stderr(&out)
            .lines()
            .filter(|l| l.starts_with("PASS"))
            .count(),
        6
    );
}

#[test]
fn validate_detects_perturbed_frequency() {
    let out = dicke(&["validate", "--json", "--perturb-omega", "1e-3"]);
    assert_eq!(code(&out), 2);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["failures"], serde_json::json!(["omega_residual"]));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&dicke(&["bogus"])), 1);
    assert_eq!(code(&dicke(&["battery", "--format", "xml"])), 1);
    assert_eq!(code(&dicke(&["--help"])), 0);
}
