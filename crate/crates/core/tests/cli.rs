use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn curvlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("curvlab-out/report.json")).expect("report written");
    serde_json::from_str(&text).expect("report is JSON")
}

#[test]
fn exit_codes_follow_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, code) in [("box_qp", 0), ("power_epigraph", 0), ("power_epigraph_flipped", 2), ("bangbang_1d", 0)] {
        let out = curvlab(&["run", name], tmp.path());
        assert_eq!(out.status.code(), Some(code), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn list_examples_plain_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["list-examples"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().any(|l| l.starts_with("bangbang_2d_circle")));

    let out = curvlab(&["list-examples", "--json"], tmp.path());
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r["name"].is_string() && r["description"].is_string()));
}

#[test]
fn version_prints_package_version() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["version"], tmp.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("curvlab {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn override_grid_resolution() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["run", "bangbang_1d", "--set", "grid.cells=64"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["config_echo"]["grid"]["cells"], 64);
    let k = r["bangbang"]["level_set"]["k_estimate"].as_f64().unwrap();
    assert!((k - 0.125).abs() < 1e-3, "{k}");
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["run", "box_qp", "--set", "no_such_key=1"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = curvlab(&["run", "missing_config.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(tmp.path().join("bad.json"), "{ \"problem\": ").unwrap();
    let out = curvlab(&["run", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_have_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["run", "state_constrained_ball"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    for key in ["config_echo", "fonc", "ndc", "curvature", "snc", "ssc", "growth", "verdict", "diagnostics"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let csv = std::fs::read_to_string(tmp.path().join("curvlab-out/samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(curvlab::cli::CSV_HEADER));
    let first = lines.next().expect("at least one sample");
    assert_eq!(first.split(',').count(), 4);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("curvlab-out/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn echoed_config_reproduces_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvlab(&["run", "box_qp", "--set", "seed=5"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let first = report(tmp.path());
    let echo = serde_json::to_string_pretty(&first["config_echo"]).unwrap();
    std::fs::write(tmp.path().join("echo.json"), echo).unwrap();
    let out = curvlab(&["run", "echo.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(tmp.path()), first);
}
