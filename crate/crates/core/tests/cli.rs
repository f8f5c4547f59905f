//! The binary end to end: exit codes, output files, JSON reports.

use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alpha-cheeger"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists")).expect("valid json")
}

#[test]
fn oracle_writes_report_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bin(&["oracle", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(&dir.path().join("oracle.json"));
    let h = report["h"].as_f64().unwrap();
    assert!((h - (2.0 + std::f64::consts::PI.sqrt())).abs() < 1e-10);
    let csv = std::fs::read_to_string(dir.path().join("cheeger_boundary.csv")).unwrap();
    assert!(csv.lines().count() > 4 * 64);
}

#[test]
fn oracle_on_a_given_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "oracle",
        "--polygon",
        "0,0;1,0;0.5,0.8660254037844386",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = read_json(&dir.path().join("oracle.json"))["h"]
        .as_f64()
        .unwrap();
    assert!((h - 6.1576).abs() < 1e-3, "h = {h}");
}

#[test]
fn bad_alpha_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "cheeger",
        "--alpha",
        "0.3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "cheeger",
        "--set",
        "foo=1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("foo"), "{}", stderr(&o));
}

#[test]
fn cluster_with_one_cell_is_rejected() {
    let o = bin(&["cluster", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unusable_start_exits_with_initialization_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "cheeger",
        "--stages",
        "1",
        "--set",
        r#"domain={"extent":[1,1],"shape":{"type":"ball","center":[0.5,0.5],"radius":0.001}}"#,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("error [optimizer]"));
}

#[test]
fn cheeger_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "cheeger",
        "--stages",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "result.json",
        "trace.csv",
        "phase_0.f64",
        "phase_0.pgm",
        "composite.pgm",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let res = read_json(&dir.path().join("result.json"));
    assert_eq!(res["stages"].as_array().unwrap().len(), 2);
    assert!(res["sharp"]["per_phase_h_alpha"][0]
        .as_f64()
        .unwrap()
        .is_finite());
}

#[test]
fn compare_reports_relative_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "compare",
        "--stages",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(&dir.path().join("compare.json"));
    let rel = report["relative_error"].as_f64().unwrap();
    assert!(rel < 0.03, "relative error {rel}");
    assert_eq!(report["final_m"].as_u64(), Some(80));
    assert!(dir.path().join("cheeger_boundary.csv").exists());
}

#[test]
fn pack_two_disks() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "pack",
        "--stages",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = read_json(&dir.path().join("packing.json"));
    let r = p["radii"][0].as_f64().unwrap();
    assert!((r - (2.0 - 2f64.sqrt()) / 2.0).abs() < 1e-6, "radius {r}");
    let svg = std::fs::read_to_string(dir.path().join("packing.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
}
