use std::path::{Path, PathBuf};
use std::process::Command;

use rough_volterra::harness::{seed_expand, RunManifest};

const BIN: &str = env!("CARGO_BIN_EXE_rough-volterra");

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], env_out: Option<&Path>) -> (i32, String, String) {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("ROUGH_VOLTERRA_OUT");
    if let Some(p) = env_out {
        cmd.env("ROUGH_VOLTERRA_OUT", p);
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SOLVE: &str = r#"{
  "kind": "solve-young",
  "kernel": {"atoms": [[1.0, 1.0]]},
  "driver": {"kind": "smooth", "function": "sin", "frequency": 2.0, "cells": 64},
  "sigma": {"name": "linear", "scale": 1.0},
  "initial": [0.5],
  "lift_gamma": 1.0,
  "solver": {"gamma": 1.0, "kappa": 0.9, "tolerance": 1e-12, "sewing_level": 4},
  "oracle": {"rk4_dt": 1e-3, "tolerance": 1e-4}
}"#;

#[test]
fn verify_algebra_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"kind": "verify", "checks": [{"name": "algebra", "trials": 20, "seed": 3, "tolerance": 1e-12}]}"#,
    );
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{stdout}");
    let m = manifest(&out);
    let names: Vec<&str> = m.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["delta-delta", "twisted-delta-delta", "chen", "chasles"]);
    assert!(m.all_passed());
    assert_eq!(m.config_hash.len(), 64);
}

#[test]
fn solve_young_records_the_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SOLVE);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{stdout}{stderr}");
    let m = manifest(&out);
    assert_eq!(m.checks.len(), 1);
    assert_eq!(m.checks[0].name, "ac5");
    assert!(m.checks[0].measured < 1e-4);

    let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = sol.lines();
    assert_eq!(lines.next().unwrap(), "t,y_1,rk4_y_1");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 65);
    let last = rows.last().unwrap();
    assert!((last[1] - last[2]).abs() < 1e-4);
    assert!(!sol.contains('\r'));

    // One diagnostics row per solver interval.
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.lines().count() >= 2);
    assert!(diag.starts_with("interval,t_start,t_end,n_param,iterations"));
}

#[test]
fn repeated_runs_write_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "e.json",
        r#"{
          "kind": "ensemble",
          "kernel": {"atoms": [[0.5, 1.0], [4.0, 0.5]]},
          "driver": {"kind": "fbm", "hurst": 0.45, "cells": 64, "seeds": "1..5"},
          "sigma": {"name": "sin", "scale": 1.0},
          "initial": [0.1],
          "solver": {"gamma": 0.4, "kappa": 0.36, "tolerance": 1e-10, "sewing_level": 2}
        }"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None).0, 0);
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--jobs", "2"], None).0, 0);
    for f in ["ensemble.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.join("ensemble.csv")).unwrap();
    let seeds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "3", "4"]);
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_out = dir.path().join("from-config");
    let body = SOLVE.replacen('{', &format!("{{\"output\": {:?},", cfg_out.to_str().unwrap()), 1);
    let cfg = write_config(dir.path(), "s.json", &body);
    let env_dir = dir.path().join("from-env");
    let flag_dir = dir.path().join("from-flag");

    assert_eq!(run(&["run", cfg.to_str().unwrap()], None).0, 0);
    assert!(cfg_out.join("manifest.json").exists());
    assert_eq!(run(&["run", cfg.to_str().unwrap()], Some(&env_dir)).0, 0);
    assert!(env_dir.join("manifest.json").exists());
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", flag_dir.to_str().unwrap()], Some(&env_dir)).0, 0);
    assert!(flag_dir.join("manifest.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write_config(dir.path(), "bad.json", "{not json");
    assert_eq!(run(&["run", bad.to_str().unwrap(), "--out", out], None).0, 2);

    let missing = write_config(dir.path(), "missing.json", r#"{"kind": "solve-rough"}"#);
    assert_eq!(run(&["run", missing.to_str().unwrap(), "--out", out], None).0, 2);

    let overlap = SOLVE.replace(r#""kind": "smooth", "function": "sin", "frequency": 2.0, "cells": 64"#, r#""kind": "fbm", "hurst": 0.6, "cells": 64, "seeds": "1..4,2""#);
    let overlap = overlap.replace(r#""oracle": {"rk4_dt": 1e-3, "tolerance": 1e-4}"#, r#""export_atoms": false"#);
    let overlap = write_config(dir.path(), "overlap.json", &overlap);
    assert_eq!(run(&["run", overlap.to_str().unwrap(), "--out", out], None).0, 2);

    let solve = write_config(dir.path(), "s.json", SOLVE);
    assert_eq!(run(&["run", solve.to_str().unwrap(), "--out", out, "--check", "ac9"], None).0, 2);

    let strict = write_config(dir.path(), "strict.json", &SOLVE.replace("\"tolerance\": 1e-4", "\"tolerance\": 1e-15"));
    assert_eq!(run(&["run", strict.to_str().unwrap(), "--out", out], None).0, 1);

    let starved = write_config(
        dir.path(),
        "starved.json",
        &SOLVE.replace("\"sewing_level\": 4", "\"sewing_level\": 4, \"max_iterations\": 2, \"min_interval\": 0.5"),
    );
    let (code, _, stderr) = run(&["run", starved.to_str().unwrap(), "--out", out], None);
    assert_eq!(code, 3, "{stderr}");
}

#[test]
fn check_filter_limits_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.json",
        r#"{"kind": "verify", "checks": [
            {"name": "algebra", "trials": 5, "seed": 3, "tolerance": 1e-12},
            {"name": "ac1", "trials": 5, "points": 8, "atoms": 2, "seed": 1, "tolerance": 1e-12}
        ]}"#,
    );
    let out = dir.path().join("out");
    let (code, _, _) = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--check", "chen"], None);
    assert_eq!(code, 0);
    let m = manifest(&out);
    assert_eq!(m.checks.len(), 1);
    assert_eq!(m.checks[0].name, "chen");
}

#[test]
fn seed_specs() {
    assert_eq!(seed_expand("42").unwrap(), [42]);
    assert_eq!(seed_expand("1..4").unwrap(), [1, 2, 3]);
    assert!(seed_expand("3..3").is_err());
}
