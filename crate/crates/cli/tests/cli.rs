//! End-to-end exercises of the `doubling` binary: flag handling, config
//! files and overrides, provenance round trips, output formats, exit codes.

use std::fs;
use std::process::{Command, Output};

use doubling_cli::config::{CommandKind, ExperimentConfig};
use doubling_cli::output::{csv_body, parse_provenance};

fn doubling(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doubling"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn verify_succeeds() {
    let out = doubling(&["verify"]);
    assert!(out.status.success(), "{}", stdout_str(&out));
    let text = stdout_str(&out);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn spectrum_matches_closed_form() {
    let out = doubling(&["spectrum", "--f", "const:0", "--N", "5"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let values: Vec<f64> = csv_body(&text)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 5);
    for (k, v) in (1..=5).rev().zip(&values) {
        let exact = 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos();
        assert!((v - exact).abs() < 1e-10, "k = {k}: {v}");
    }
}

#[test]
fn provenance_header_round_trips() {
    let out = doubling(&[
        "lyapunov",
        "--f",
        "const:0",
        "--grid",
        "-1:1:3",
        "--n",
        "100",
        "--samples",
        "2",
        "--lambda",
        "1.5",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let header = text.lines().next().unwrap();
    let config: ExperimentConfig = parse_provenance(header).expect("header parses");
    assert_eq!(config.command, CommandKind::Lyapunov);
    assert_eq!(config.lambda, 1.5);
    assert_eq!(config.n_steps, 100);
    assert_eq!((config.grid.lo, config.grid.hi, config.grid.count), (-1.0, 1.0, 3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"lambda": 2.5, "n_steps": 200, "n_samples": 3, "f": {"kind": "const", "value": 0.0}, "grid": {"lo": 0.0, "hi": 1.0, "count": 2}}"#,
    )
    .unwrap();
    let out = doubling(&[
        "lyapunov",
        "--config",
        cfg_path.to_str().unwrap(),
        "--lambda",
        "3.5",
    ]);
    assert!(out.status.success(), "{:?}", out);
    let text = stdout_str(&out);
    let config = parse_provenance(text.lines().next().unwrap()).unwrap();
    assert_eq!(config.lambda, 3.5); // flag wins
    assert_eq!(config.n_steps, 200); // file value survives
    assert_eq!(config.n_samples, 3);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, r#"{"lambda": 1.0, "coupling": 2.0}"#).unwrap();
    let out = doubling(&["lyapunov", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_failures_exit_one() {
    for args in [
        vec!["lyapunov", "--lambda", "-2"],
        vec!["lyapunov", "--f", "sine"],
        vec!["bands", "--theta", "seed:3"],
        vec!["lyapunov", "--grid", "2:1:5"],
        vec!["spectrum", "--alpha", "4.0"],
        vec!["lyapunov", "--samples", "1"],
    ] {
        let out = doubling(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let out = doubling(&["lyapunov", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = doubling(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_format_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("f.txt");
    fs::write(&table_path, "-1.0\n1.0\n").unwrap();
    let table_flag = format!("table:{}", table_path.display());

    let csv = doubling(&["bands", "--theta", "digits:01", "--f", &table_flag, "--lambda", "1.5"]);
    assert!(csv.status.success(), "{csv:?}");
    let json = doubling(&[
        "bands",
        "--theta",
        "digits:01",
        "--f",
        &table_flag,
        "--lambda",
        "1.5",
        "--format",
        "json",
    ]);
    assert!(json.status.success());

    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&json)).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let csv_rows: Vec<String> = csv_body(&stdout_str(&csv))
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    assert_eq!(rows.len(), csv_rows.len());
    assert_eq!(rows.len(), 2); // alternating ±λ has two bands
    // First band edge agrees across formats.
    let json_lo = rows[0][1].as_f64().unwrap();
    let csv_lo: f64 = csv_rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(json_lo.to_bits(), csv_lo.to_bits());
}

#[test]
fn out_file_written_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    let out = doubling(&[
        "lyapunov",
        "--f",
        "const:0",
        "--grid",
        "0:1:2",
        "--n",
        "50",
        "--samples",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# config = "));
    assert!(parse_provenance(text.lines().next().unwrap()).is_some());
}

#[test]
fn float_demo_reports_collapse() {
    let out = doubling(&["float-demo", "--theta", "rational:1/3", "--n", "80"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(
        text.contains("collapsed to exact 0 at step"),
        "missing collapse note:\n{text}"
    );
    assert!(text.contains("max |err| = 0.000e0") || text.contains("max |err| = "));
}

#[test]
fn small_run_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let out = doubling(&[
            "lyapunov",
            "--lambda",
            "2",
            "--grid",
            "-2:2:9",
            "--n",
            "5000",
            "--samples",
            "6",
            "--seed",
            "99",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        bodies.push(csv_body(&fs::read_to_string(&path).unwrap()));
    }
    assert_eq!(bodies[0], bodies[1]);
}
