use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn nehari(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nehari"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

struct Run {
    dir: TempDir,
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }

    fn csv(&self, name: &str) -> Vec<Vec<String>> {
        std::fs::read_to_string(self.path(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }
}

fn run_text(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, stdout, stderr) = nehari(&args);
    Run {
        dir,
        code,
        stdout,
        stderr,
    }
}

fn run(cmd: &str, config: &Value, extra: &[&str]) -> Run {
    run_text(cmd, &serde_json::to_string_pretty(config).unwrap(), extra)
}

fn tiny() -> Value {
    json!({
        "problem": {
            "domain": { "dim": 1, "side": 1, "boundary": "dirichlet" },
            "nonlinearity": { "family": "power", "q": 4 },
            "p": 2
        }
    })
}

fn box2(side: usize, q: f64, p: f64) -> Value {
    json!({
        "problem": {
            "domain": { "dim": 2, "side": side, "boundary": "dirichlet" },
            "nonlinearity": { "family": "power", "q": q },
            "p": p
        }
    })
}

fn f(v: &str) -> f64 {
    v.parse().unwrap()
}

#[test]
fn solve_tiny_instance() {
    let r = run("solve", &tiny(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json("result.json");
    assert!((j["energy"].as_f64().unwrap() - 1.0).abs() <= 1e-8);
    let u = r.csv("u.csv");
    assert!((f(&u[0][1]) - 2f64.sqrt()).abs() <= 1e-8);
    assert!(!r.csv("trace.csv").is_empty());
    for script in ["u.gp", "trace.gp"] {
        assert!(r.path(script).exists());
    }
}

#[test]
fn linear_growth_is_a_config_error_citing_the_quotient_check() {
    let r = run("solve", &box2(5, 2.0, 2.0), &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("monotone_quotient"), "{}", r.stderr);
}

#[test]
fn iteration_cap_exits_two_with_short_trace() {
    let mut c = box2(9, 4.0, 2.0);
    c["solver"] = json!({ "max_iterations": 1 });
    let r = run("solve", &c, &[]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert_eq!(r.csv("trace.csv").len(), 1);
    assert_eq!(r.json("result.json")["converged"], json!(false));
}

#[test]
fn malformed_configs_exit_one_with_position() {
    let r = run_text("solve", "{\n  \"problem\": {\n    \"domain\": 3,\n", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("config.json:3:"), "{}", r.stderr);

    let mut c = tiny();
    c["problem"]["extra"] = json!(1);
    let r = run("solve", &c, &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown field `extra`"), "{}", r.stderr);

    let mut c = tiny();
    c["problem"]["domain"]["side"] = json!(0);
    let r = run("solve", &c, &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains(": domain:"), "{}", r.stderr);

    let (code, _, _) = nehari(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 1);
    let (code, _, _) = nehari(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn seed_flag_overrides_config() {
    let mut c = box2(7, 4.0, 2.0);
    c["solver"] = json!({ "initial": { "kind": "random" } });
    let a = run("solve", &c, &["--seed", "3"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.json("result.json")["seed"], json!(3));
}

#[test]
fn initial_guess_from_file() {
    let first = run("solve", &box2(7, 4.0, 2.0), &[]);
    assert_eq!(first.code, 0);
    let mut c = box2(7, 4.0, 2.0);
    c["solver"] = json!({ "initial": { "kind": "file", "path": first.path("u.csv") } });
    let again = run("solve", &c, &[]);
    assert_eq!(again.code, 0, "{}", again.stderr);
    let j = again.json("result.json");
    assert!(j["iterations"].as_u64().unwrap() <= 2);
    assert!((j["energy"].as_f64().unwrap() - first.json("result.json")["energy"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn fiber_profile_of_tiny_instance() {
    let mut c = tiny();
    c["fiber"] = json!({ "u": { "kind": "values", "values": [1.0] }, "t": [0.5, 1.0, 2f64.sqrt(), 2.0] });
    let r = run("fiber", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.csv("fiber.csv");
    let psi: Vec<f64> = rows.iter().map(|row| f(&row[1])).collect();
    for (got, want) in psi.iter().zip([0.234375, 0.75, 1.0, 0.0]) {
        assert!((got - want).abs() <= 1e-12, "{psi:?}");
    }
    assert_eq!(rows.iter().filter(|row| row[3] == "1").count(), 1);
    assert_eq!(rows[2][3], "1");
    assert_eq!(r.json("fiber.json")["slope_sign_changes"], json!(1));
}

#[test]
fn fiber_on_a_range_changes_slope_sign_once() {
    let mut c = box2(7, 5.0, 2.0);
    c["fiber"] = json!({ "t": { "from": 0.01, "to": 100.0, "points": 200, "log": true } });
    let r = run("fiber", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let slopes: Vec<f64> = r.csv("fiber.csv").iter().map(|row| f(&row[2])).collect();
    let changes = slopes
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] < 0.0 || w[0] < 0.0 && w[1] > 0.0)
        .count();
    assert_eq!(changes, 1);
    assert_eq!(r.csv("fiber.csv").len(), 201);
}

#[test]
fn fiber_at_one_is_the_energy() {
    let solved = run("solve", &tiny(), &[]);
    let mut c = tiny();
    c["fiber"] = json!({ "u": { "kind": "values", "values": [0.7] }, "t": [1.0] });
    let r = run("fiber", &c, &[]);
    assert_eq!(r.code, 0);
    let row = &r.csv("fiber.csv")[0];
    assert_eq!(f(&row[0]), 1.0);
    // 0.7² − 0.7⁴/4
    assert!((f(&row[1]) - (0.49 - 0.2401 / 4.0)).abs() <= 1e-15);
    drop(solved);

    c["fiber"]["u"] = json!({ "kind": "values", "values": [0.0] });
    assert_eq!(run("fiber", &c, &[]).code, 1);
}

fn torus() -> Value {
    json!({
        "problem": {
            "domain": { "dim": 2, "side": 8, "boundary": "torus" },
            "potential": { "mode": "periodic", "period": 2, "cells": [1.0, 1.5, 1.5, 2.0] },
            "nonlinearity": { "family": "power", "q": 4 },
            "p": 2
        },
        "distinct": { "period": 2, "starts": 5 }
    })
}

#[test]
fn distinct_orbits() {
    let r = run("distinct", &torus(), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json("orbits.json")["representatives"].as_array().unwrap().len(), 1);
    assert!(r.path("orbit_0.csv").exists());

    let mut c = torus();
    c["distinct"]["sign_companions"] = json!(true);
    let r = run("distinct", &c, &[]);
    assert_eq!(r.json("orbits.json")["representatives"].as_array().unwrap().len(), 2);
    assert!(r.path("orbit_1.csv").exists());

    let mut c = torus();
    c["distinct"] = json!({ "period": 2, "starts": 4, "plan": "mixed", "orbit_tol": "inf", "sign_companions": true });
    let r = run("distinct", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json("orbits.json")["representatives"].as_array().unwrap().len(), 1);

    let mut c = torus();
    c["distinct"]["period"] = json!(3);
    assert_eq!(run("distinct", &c, &[]).code, 1);
}

#[test]
fn verify_exit_codes() {
    let r = run("verify", &box2(15, 6.0, 2.0), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.path("verify.txt").exists());
    let checks = r.json("verify.json")["checks"].as_array().unwrap().clone();
    assert_eq!(checks.len(), 9);

    let r = run("verify", &box2(9, 2.0, 2.0), &[]);
    assert_eq!(r.code, 3, "{}", r.stdout);
    let j = r.json("verify.json");
    let status = |name: &str| {
        j["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap()["status"]
            .clone()
    };
    assert_eq!(status("superlinearity"), json!("pass"));
    assert_eq!(status("fibering_inequality"), json!("fail"));
    let growth = j["hypotheses"]["growth"]["checks"].as_array().unwrap();
    assert!(growth
        .iter()
        .any(|c| c["name"] == "monotone_quotient" && c["status"] == "fail"));

    let r = run("verify", &box2(15, 6.0, 1.5), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let skipped: Vec<Value> = r.json("verify.json")["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "skipped")
        .cloned()
        .collect();
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0]["detail"], json!("skipped: requires p >= 2"));
}

#[test]
fn verify_is_reproducible() {
    let a = run("verify", &box2(7, 4.0, 3.0), &["--seed", "5"]);
    let b = run("verify", &box2(7, 4.0, 3.0), &["--seed", "5"]);
    assert_eq!(
        std::fs::read(a.path("verify.json")).unwrap(),
        std::fs::read(b.path("verify.json")).unwrap()
    );
}

#[test]
fn sweeps() {
    let mut c = box2(8, 4.0, 2.0);
    c["sweep"] = json!({ "axis": "side", "values": [8, 12, 16] });
    let r = run("sweep", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.csv("sweep.csv");
    let b: Vec<f64> = rows.iter().map(|row| f(&row[1])).collect();
    let s: Vec<f64> = rows.iter().map(|row| f(&row[2])).collect();
    assert!(b.windows(2).all(|w| w[0] >= w[1]), "{b:?}");
    assert!(s.windows(2).all(|w| w[0] >= w[1]), "{s:?}");

    let mut c = box2(9, 4.0, 2.0);
    c["sweep"] = json!({ "axis": "potential", "values": [0.0, 0.5, 1.0], "sobolev": false });
    let r = run("sweep", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let b: Vec<f64> = r.csv("sweep.csv").iter().map(|row| f(&row[1])).collect();
    assert!(b.windows(2).all(|w| w[0] <= w[1]), "{b:?}");

    c["sweep"]["values"] = json!([]);
    let r = run("sweep", &c, &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("empty"), "{}", r.stderr);
}

#[test]
fn sweep_records_failures_in_row() {
    let mut c = box2(9, 4.0, 2.0);
    c["sweep"] = json!({ "axis": "q", "values": [4.0, 1.5], "sobolev": false });
    let r = run("sweep", &c, &[]);
    assert_eq!(r.code, 2);
    let rows = r.csv("sweep.csv");
    assert_eq!(rows[0][4], "converged");
    assert_eq!(rows[1][4], "error");
    assert!(rows[1].len() >= 6 && !rows[1][5].is_empty());
}

#[test]
fn sobolev_writes_both_estimates() {
    let mut c = box2(9, 5.0, 2.0);
    c["sobolev"] = json!({ "starts": 3 });
    let r = run("sobolev", &c, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json("sobolev.json");
    let (a, b) = (j["nehari"]["s"].as_f64().unwrap(), j["direct"]["s"].as_f64().unwrap());
    assert!((a - b).abs() / a < 1e-3);
    assert!(a <= j["delta_quotient"].as_f64().unwrap());
    assert!(r.path("extremal.csv").exists());
}

#[test]
fn schema_file_is_current() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config.schema.json");
    let mut text = serde_json::to_string_pretty(&nehari_cli::config::schema()).unwrap();
    text.push('\n');
    if std::env::var_os("NEHARI_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    assert_eq!(
        std::fs::read_to_string(&path).unwrap_or_default(),
        text,
        "regenerate with NEHARI_BLESS=1"
    );
}

#[test]
fn example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        nehari_cli::config::Loaded::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
