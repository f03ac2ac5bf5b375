use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn cge(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("CGE_THREADS", "2")
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Runs twice in fresh directories and returns the files of the first run.
fn twice(args: &[&str]) -> Vec<(String, Vec<u8>)> {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = cge(args, d.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.iter().any(|(n, _)| n == "manifest.json"));
    assert_eq!(fa, fb, "{args:?}");
    fa
}

fn text<'a>(fs: &'a [(String, Vec<u8>)], name: &str) -> &'a str {
    std::str::from_utf8(&fs.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("no {name}")).1).unwrap()
}

#[test]
fn exponent_tables_are_reproducible() {
    let f = twice(&["exponent", "--kappa", "2", "--grid", "16"]);
    let lambda = text(&f, "lambda.csv");
    assert!(lambda.starts_with("lambda,Lambda\n"));
    assert_eq!(lambda.lines().count(), 17);
    assert!(text(&f, "legendre.csv").lines().nth(1).unwrap().split(',').count() == 4);
    assert!(text(&f, "dimension_bound.csv").starts_with("alpha,bound\n"));
}

#[test]
fn kappa_zero_table_reaches_one() {
    let d = TempDir::new().unwrap();
    let o = cge(&["exponent", "--kappa", "0", "--grid", "16"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(d.path().join("lambda.csv")).unwrap();
    let last: Vec<f64> = table.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(last[0] > 0.95 && last[1].is_finite());
}

#[test]
fn kappa_at_least_four_exits_with_two() {
    let d = TempDir::new().unwrap();
    for cmd in ["exponent", "grow"] {
        let o = cge(&[cmd, "--kappa", "4.5", "--seed", "1"], d.path());
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("diverge"));
    }
}

#[test]
fn bad_input_exits_with_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(cge(&["grow", "--targets", "1.5,0", "--seed", "1"], d.path()).status.code(), Some(2));
    assert_eq!(cge(&["grow", "--targets", "0,0"], d.path()).status.code(), Some(2));
    assert_eq!(cge(&["grow", "--targets", "zero", "--seed", "1"], d.path()).status.code(), Some(2));
}

#[test]
fn two_target_run_has_one_disconnection_row() {
    let f = twice(&["grow", "--kappa", "2", "--t-max", "1", "--targets", "0,0;0.4,0.2", "--seed", "5"]);
    let rows: Vec<&str> = text(&f, "disconnection.csv").lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,1,"));
    let manifest: serde_json::Value = serde_json::from_str(text(&f, "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["parameters"]["kappa"], 2.0);
    assert!(manifest["version"].is_string());
}

#[test]
fn snapshots_are_reproducible() {
    let f = twice(&["render", "--kappa", "0", "--arcs", "5,10", "--invert", "--seed", "3"]);
    for name in ["arcs_0005.svg", "arcs_0010.svg", "arcs_0005_inverted.svg", "arcs_0010_inverted.svg"] {
        assert!(text(&f, name).contains("viewBox=\"0 0 1000 1000\""));
    }
}

#[test]
fn stochastic_commands_are_reproducible() {
    twice(&["capacity-mc", "--replicas", "300", "--seed", "2"]);
    twice(&["disconnect", "--replicas", "6", "--seed", "2"]);
    twice(&["shrinkage", "--t-max", "1", "--replicas", "4", "--seed", "2"]);
    twice(&["dimension", "--kappa", "0", "--arcs", "40", "--seed", "2"]);
    let f = twice(&["field", "--grid", "6", "--t-max", "0.5", "--seed", "2"]);
    assert!(f.iter().find(|(n, _)| n == "field.pgm").unwrap().1.starts_with(b"P5\n6 6\n255\n"));
    twice(&["subordinator", "--replicas", "200", "--seed", "2"]);
}

#[test]
fn tampered_tolerances_exit_with_three() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("tol.json");
    let pinned = serde_json::to_string(&cge_core::validate::Tolerances::pinned()).unwrap();
    fs::write(&path, pinned.replace("\"ks_level\":0.01", "\"ks_level\":0.001")).unwrap();
    let o = cge(&["validate", "--tolerances", path.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(3));
    fs::write(&path, "{\"laplace_sigmas\": 3.0}").unwrap();
    assert_eq!(cge(&["validate", "--tolerances", path.to_str().unwrap()], d.path()).status.code(), Some(3));
}
