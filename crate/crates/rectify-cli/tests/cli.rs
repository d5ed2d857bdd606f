use std::path::Path;
use std::process::{Command, Output};

use rectify::pointset::{Generator, PointSet, Window};
use tempfile::TempDir;

fn rectify(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rectify")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rectify(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).expect("valid JSON")
}

#[test]
fn analyze_then_certify() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["generate", "--kind", "lattice", "--side", "16", "--out", "x.txt"]);
    let csv = ok(d, &["analyze", "--points", "x.txt", "--rho", "auto", "--imax", "3", "--format", "csv"]);
    assert!(csv.starts_with("i,E\n"));
    // Every unit cube of the lattice holds one point.
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1.00000000000000000e0")), "{csv}");
    std::fs::write(d.join("prof.csv"), csv).unwrap();

    let c = json(&ok(d, &["certify", "membership", "--profile", "prof.csv", "--omega", "logpow:2", "--d", "2"]));
    assert_eq!(c["schema"], "rectify.certificate/1");
    assert_eq!(c["verdict"], "diverges");
    let c = json(&ok(d, &["certify", "membership", "--profile", "prof.csv", "--omega", "logpow:3", "--d", "2"]));
    assert_eq!(c["verdict"], "pass");
    let c = json(&ok(d, &["certify", "series", "--profile", "prof.csv", "--omega", "logpow:3", "--d", "2", "--c-eta", "10"]));
    assert_eq!(c["constants"]["C_eta"], 10.0);
    assert_eq!(c["constants"]["grad_bound"], 1.0);
}

#[test]
fn solve_reports_and_enforces_tolerance() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["--seed", "4", "generate", "--kind", "random", "--depth", "3", "--out", "f.json"]);
    let r = json(&ok(d, &["solve", "--density", "f.json", "--depth", "3", "--mode", "exact2d", "--svg", "grid.svg"]));
    assert_eq!(r["schema"], "rectify.pushforward/1");
    assert!(r["max_error"].as_f64().unwrap() <= 1e-9);
    let svg = std::fs::read_to_string(d.join("grid.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let out = rectify(d, &["solve", "--density", "f.json", "--depth", "3", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn match_and_distort_on_the_lattice() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["generate", "--kind", "lattice", "--side", "6", "--out", "x.txt"]);
    let m = ok(d, &["match", "--points", "x.txt", "--format", "csv", "--out", "m.csv"]);
    assert!(m.is_empty());
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!((v[0], v[1]), (v[2], v[3]));
    }
    let r = json(&ok(d, &["distort", "--matching", "m.csv", "--omega", "lipschitz", "--radii", "2,4", "--pairs", "200"]));
    assert_eq!(r["forward"], 1.0);
    assert_eq!(r["backward"], 1.0);
    assert_eq!(r["label"], "empirical_lower_bound");
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    assert_eq!(rectify(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(rectify(d, &["analyze", "--points", "missing.txt"]).status.code(), Some(2));
    assert_eq!(rectify(d, &["certify", "oscillation", "--phi", "pow:2", "--omega", "nonsense"]).status.code(), Some(2));
    ok(d, &["generate", "--kind", "lattice", "--side", "4", "--out", "x.txt"]);
    std::fs::write(d.join("shift.txt"), shifted_lattice(4)).unwrap();
    let out = rectify(d, &["match", "--points", "shift.txt", "--radius", "0.4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"neighbours\":[]"));
}

fn shifted_lattice(side: i64) -> String {
    let p = PointSet::generate(Generator::Lattice { d: 2, spacing: 1.0, side }).unwrap();
    let coords: Vec<f64> = p.points().flat_map(|q| [q[0] + 0.5, q[1]]).collect();
    let w = Window { lo: vec![0, 0], hi: vec![side + 1, side] };
    PointSet::new(2, coords, w).unwrap().to_text()
}

#[test]
fn bk_and_lagarias_reports() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let r = json(&ok(d, &["bk", "--phi", "pow:2", "--omega", "logpow:1"]));
    assert_eq!(r["schema"], "rectify.bk/1");
    assert_eq!(r["certificate"]["verdict"], "pass");
    ok(d, &["bk", "--levels", "1", "--field", "bk.json", "--max-depth", "10"]);
    let f = rectify::density::DyadicField::from_json(&std::fs::read_to_string(d.join("bk.json")).unwrap()).unwrap();
    assert!(f.values().iter().all(|&v| v == 1.0 || v == 2.0));
    let l = json(&ok(d, &["certify", "lagarias", "--p", "0.5", "--jmax", "40"]));
    let b: Vec<f64> = l["rows"].as_array().unwrap().iter().map(|r| r[2].as_f64().unwrap()).collect();
    assert!(b.windows(2).all(|w| w[1] <= w[0]));
    assert!(l["fit"]["r2"].as_f64().unwrap() > 0.9);
}
