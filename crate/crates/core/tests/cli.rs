use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlc"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mlc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn diagnostic(out: &Output) -> Value {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "diagnostic must be one line: {err}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn genus_two_trivial_solve_writes_report() {
    let out_dir = scratch("g2");
    let cfg = configs().join("genus2-trivial.json");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--vtk"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 8);
    assert!(report["area_identity_residual"].as_f64().unwrap() <= 1e-6);
    let u = std::fs::read_to_string(out_dir.join("u.csv")).unwrap();
    assert!(u.starts_with("id,value\n"));
    let vtk = std::fs::read_to_string(out_dir.join("solution.vtk")).unwrap();
    assert!(vtk.contains("SCALARS u double 1"));
}

#[test]
fn report_is_bitwise_deterministic() {
    let cfg = configs().join("genus2-twisted.json");
    let a = scratch("det-a");
    let b = scratch("det-b");
    for d in [&a, &b] {
        let out = run(&["report", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ra = std::fs::read(a.join("report.json")).unwrap();
    let rb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn sphere_spacelike_is_a_precondition_failure() {
    let cfg = configs().join("sphere-spacelike.json");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", scratch("sphere").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["exit_code"], 2);
}

#[test]
fn malformed_and_unknown_configs_exit_one() {
    let dir = scratch("bad");
    for text in ["{ not json", r#"{"mesh": {"icosphere": {"level": 1}}, "colour": 1}"#, r#"{"tol": -1}"#] {
        let cfg = write_config(&dir, text);
        let out = run(&["solve", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        diagnostic(&out);
    }
    let missing = run(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(1));
    let usage = run(&["solve"]);
    assert_eq!(usage.status.code(), Some(1));
    assert_eq!(diagnostic(&usage)["error"], "usage");
    let bad_tol = run(&["solve", "--config", "x.json", "--tol", "abc"]);
    assert_eq!(bad_tol.status.code(), Some(1));
}

#[test]
fn hodge_reports_torus_generator_and_genus_two_dimension() {
    let dir = scratch("hodge-torus");
    let cfg = configs().join("torus-generator.json");
    let out = run(&["hodge", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["harmonic_dimension"], 2);
    assert!(s["harmonic_norm"].as_f64().unwrap() > 0.1);
    assert!(dir.join("gamma.csv").exists());

    let dir = scratch("hodge-g2");
    let cfg = write_config(&dir, r#"{"mesh": {"generate": {"genus": 2}}, "beta": {"exact": 1.0}}"#);
    let out = run(&["hodge", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["harmonic_dimension"], 4);
    assert!(s["harmonic_norm"].as_f64().unwrap() <= 1e-8);
    assert!(s["exact_norm"].as_f64().unwrap() > 0.1);
}

#[test]
fn chart_verify_scenarios() {
    let dir = scratch("chart");
    for (name, bound) in [
        ("example-levi-civita-negative", 1e-8),
        ("weyl-change", 1e-9),
        ("hyperbolic-trivial", 1e-10),
    ] {
        let cfg = write_config(&dir, &format!(r#"{{"scenario": "{name}"}}"#));
        let out = run(&["chart-verify", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
        assert!(!rows.is_empty());
        for r in &rows {
            let res = r["residual"].as_f64().unwrap();
            assert!(res <= bound, "{name} {} = {res:e}", r["identity"]);
        }
    }
    let cfg = write_config(&dir, r#"{"scenario": "no-such-chart"}"#);
    let out = run(&["chart-verify", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    diagnostic(&out);
}
