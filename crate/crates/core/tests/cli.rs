use std::path::Path;
use std::process::{Command, Output};

fn fracmart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmart"))
        .args(args)
        .env_remove("FRACMART_WORKERS")
        .output()
        .expect("spawn fracmart")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn constants_prints_c_t() {
    let o = fracmart(&["constants", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("C_t = 3.414213"), "{}", stdout(&o));
}

#[test]
fn constants_with_case_parameters() {
    let o = fracmart(&["constants", "--alpha", "-0.25", "--beta-prime", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("C_beta_beta' = 8"), "{}", stdout(&o));
}

#[test]
fn mayo_reports_constant_and_pass() {
    let o = fracmart(&["mayo", "--alpha", "0.4", "--eps", "0.7"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("C = 0.37700") && s.contains("PASS"), "{s}");
}

#[test]
fn tail_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = fracmart(&[
            "tail",
            "--case",
            "iii",
            "--alpha",
            "0",
            "--eps",
            "0.25",
            "--L",
            "1",
            "--t",
            "1",
            "--paths",
            "10000",
            "--seed",
            "7",
            "--out",
            arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        csv.push(std::fs::read(out.join("tail.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv[0].clone()).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "iii");
    assert_eq!(row[9], "0", "k");
    assert_eq!(row[10], "10000", "N");
    assert_eq!(row[15], "PASS");
    let threshold: f64 = row[7].parse().unwrap();
    assert!((threshold - 641.7).abs() < 0.05, "{threshold}");
}

#[test]
fn usage_and_constraint_errors_exit_2() {
    assert_eq!(fracmart(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fracmart(&["constants", "--no-such-flag"]).status.code(), Some(2));
    let o = fracmart(&["bound", "--case", "ii", "--alpha", "0.25", "--eps", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0 < eps < alpha"), "{}", stderr(&o));
    let o = fracmart(&["bound", "--case", "i", "--alpha", "0.25", "--beta-prime", "6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fracmart(&["tail", "--case", "iii", "--alpha", "0", "--eps", "0.25"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
    let o = fracmart(&[
        "tail", "--case", "iii", "--alpha", "0", "--eps", "0.25", "--seed", "1", "--eta", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--eta"), "{}", stderr(&o));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmart(&[
        "wlln",
        "--alpha",
        "0",
        "--eta",
        "0.001",
        "--t-values",
        "1,2",
        "--paths",
        "200",
        "--cells",
        "64",
        "--seed",
        "1",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("FAIL"));
}

#[test]
fn flags_override_config_and_effective_config_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("in.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": 0, "case": "iii", "eps": 0.25, "seed": 7, "paths": 100, "cells": 64, "L": [1, 2]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = fracmart(&[
        "tail",
        "--config",
        arg(&cfg),
        "--paths",
        "200",
        "--timestamp",
        "12",
        "--out",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("tail.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(
        csv.lines().skip(1).all(|l| l.split(',').nth(10) == Some("200")),
        "{csv}"
    );
    let eff: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tail.config.json")).unwrap()).unwrap();
    assert_eq!(eff["paths"], 200);
    assert_eq!(eff["cells"], 64);
    assert_eq!(eff["timestamp"], 12);
    assert_eq!(eff["command"], "tail");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tail.json")).unwrap()).unwrap();
    assert_eq!(summary["config"], eff);
    assert_eq!(summary["run"]["seed"], 7);
    assert_eq!(summary["run"]["timestamp"], 12);
    assert!(summary["run"]["version"].as_str().unwrap().starts_with("fracmart "));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("in.json");
    std::fs::write(&cfg, r#"{"alpha": 0, "colour": "blue"}"#).unwrap();
    assert_eq!(fracmart(&["constants", "--config", arg(&cfg)]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"command": "wlln", "alpha": 0}"#).unwrap();
    assert_eq!(fracmart(&["constants", "--config", arg(&cfg)]).status.code(), Some(2));
    std::fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(fracmart(&["constants", "--config", arg(&cfg)]).status.code(), Some(2));
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (name, workers) in [("one", "1"), ("three", "3")] {
        let out = dir.path().join(name);
        let o = fracmart(&[
            "fixed-time",
            "--alpha",
            "-0.25",
            "--variant",
            "remark",
            "--beta-prime",
            "6",
            "--integrand",
            "shifted-gauss",
            "--hurst",
            "0.75",
            "--paths",
            "500",
            "--cells",
            "128",
            "--seed",
            "5",
            "--timestamp",
            "1",
            "--workers",
            workers,
            "--out",
            arg(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((
            std::fs::read(out.join("fixed-time.csv")).unwrap(),
            std::fs::read(out.join("fixed-time.json")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    let o = Command::new(env!("CARGO_BIN_EXE_fracmart"))
        .args([
            "calpha", "--alpha", "0.25", "--cells", "256", "--paths", "50", "--m", "64,256", "--seed", "2",
        ])
        .env("FRACMART_WORKERS", "2")
        .output()
        .unwrap();
    let p = fracmart(&[
        "calpha", "--alpha", "0.25", "--cells", "256", "--paths", "50", "--m", "64,256", "--seed", "2",
    ]);
    assert_eq!(o.stdout, p.stdout);
    assert_eq!(stdout(&p).lines().count(), 3);
}

#[test]
fn simulate_dumps_wide_csv() {
    let o = fracmart(&[
        "simulate",
        "--process",
        "bm",
        "--paths",
        "3",
        "--cells",
        "8",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "t,path_0,path_1,path_2");
    assert_eq!(lines[1], "0,0,0,0");
    assert!(lines[9].starts_with("1,"));

    let o = fracmart(&[
        "simulate",
        "--process",
        "m",
        "--alpha",
        "-0.25",
        "--paths",
        "2",
        "--cells",
        "16",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().nth(1), Some("0,0,0"));
    let o = fracmart(&[
        "simulate",
        "--process",
        "fbm",
        "--paths",
        "1",
        "--cells",
        "16",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2), "hurst is required");
}

#[test]
fn toeplitz_and_bound_print_tables() {
    let o = fracmart(&["toeplitz", "--alpha", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("function,t,ratio,error"));
    let o = fracmart(&["bound", "--case", "iii", "--alpha", "0", "--eps", "0.25", "--L", "1,2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    assert!(s.lines().nth(1).unwrap().starts_with("iii,0,1,1,1,641.69"), "{s}");
}
