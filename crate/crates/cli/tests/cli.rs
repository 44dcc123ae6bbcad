use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn covlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covlab")).args(args).output().expect("binary runs")
}

fn run_config(dir: &Path, command: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{command}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    covlab(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["N", "value", "normalized", "exact", "mesh_certificate"]);
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn cover_unit_interval_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), "cover", r#"{"model": {"box": {"dim": 1, "side": 1.0}}, "schedule": {"from": 1, "to": 100}}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = rows(&dir.path().join("out/records.csv"));
    assert_eq!(recs.len(), 100);
    for r in &recs {
        assert!((r[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r[3], "true");
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["records"].as_array().unwrap().len(), 100);
    assert_eq!(manifest["config"]["schedule"]["to"], 100);
}

#[test]
fn fractal_cantor_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), "fractal", r#"{"model": "cantor", "schedule": {"from": 1, "to": 4096}}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["lattice"], true);
    assert_eq!(report["base"], "1/3");
    assert!(report["oscillation_ratio"].as_f64().unwrap() >= 2.9);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), "cover", r#"{"model": {"box": {"dim": 1, "side": 1.0}}, "schedule": [1, 3, 2]}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["path"], "schedule[2]");
    let out = run_config(dir.path(), "polarize", r#"{"model": {"box": {"dim": 1, "side": 1.0}}, "schedule": [1], "s": 1.0}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_config(dir.path(), "cover", r#"{"model": {"box": {"dim": 1, "side": 1.0}}, "schedule": [1], "mesh": 0}"#, &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_config(dir.path(), "cover", "{not json", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(covlab(&["cover"]).status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_records() {
    let cfg = r#"{"model": {"box": {"dim": 2, "side": 1.0}}, "schedule": [3, 5], "s": 4.0, "restarts": 2}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_config(a.path(), "polarize", cfg, &["--seed", "11"]);
    let ob = run_config(b.path(), "polarize", cfg, &["--seed", "11"]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    let ca = fs::read(a.path().join("out/records.csv")).unwrap();
    assert_eq!(ca, fs::read(b.path().join("out/records.csv")).unwrap());
    for r in rows(&a.path().join("out/records.csv")) {
        assert_eq!(r[3], "false");
        assert!(r[4].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(read_json(&a.path().join("out/manifest.json"))["seed"], 11);
}

#[test]
fn failing_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"box": {"dim": 1, "side": 1.0}}, "schedule": [10], "cells": 4, "max_deviation": 0.0}"#;
    assert_eq!(run_config(dir.path(), "uniformity", cfg, &[]).status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("v");
    let out = Command::new(env!("CARGO_BIN_EXE_covlab"))
        .args(["verify", "--out", out_dir.to_str().unwrap()])
        .env("COVLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 10);
}
