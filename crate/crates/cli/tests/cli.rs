use std::path::Path;
use std::process::Command;

use gapmaps::{read_dataset, write_dataset, Cell, Dataset};

fn gapmaps(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gapmaps"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn csv_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let mut d = Dataset::new(&["p1", "p2", "x", "p", "q", "kind"]);
    let mut v = 0.1f64;
    for i in 0..500 {
        v = (v * 3.7 + 0.123_456_789).fract() * 10f64.powi(i % 40 - 20);
        d.push(vec![Cell::Float(v), Cell::Float(-v / 3.0), Cell::Float(f64::MIN_POSITIVE * i as f64), Cell::Int(i as i64 - 7), Cell::Int(3), Cell::from("BC_I")]);
    }
    write_dataset(&d, &path).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back.columns, d.columns);
    for (a, b) in d.rows.iter().zip(&back.rows) {
        for (x, y) in a.iter().zip(b) {
            match (x, y) {
                (Cell::Float(x), Cell::Float(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                (Cell::Float(x), Cell::Int(y)) => assert_eq!(*x, *y as f64),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn empty_range_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapmaps(&["rotnum", "--family", "canonical", "--a", "1:0:0.1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty range"));
}

#[test]
fn constraint_violation_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapmaps(&["cherry-return", "--b", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapmaps(&["sts-codim2", "--gamma", "0.5", "--alpha-max", "0.9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "numerical");
}

#[test]
fn staircase_output_is_monotone_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["rotnum", "--family", "canonical", "--n", "5", "--b", "0.9", "--c", "1.2", "--a", "0:1:5e-3", "--jobs", "2"];
    assert_eq!(gapmaps(&args, a.path()).status.code(), Some(0));
    assert_eq!(gapmaps(&args, b.path()).status.code(), Some(0));
    let csv_a = std::fs::read(a.path().join("rotnum.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("rotnum.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let d = read_dataset(&a.path().join("rotnum.csv")).unwrap();
    let rho = d.floats("rho");
    assert_eq!(rho.len(), 201);
    assert!(rho.windows(2).all(|w| w[1] >= w[0] - 2e-4));
    assert!(rho[0].abs() < 1e-4 && (rho[200] - 1.0).abs() < 1e-4);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("rotnum.json")).unwrap()).unwrap();
    for key in ["config", "version", "started", "elapsed_s"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn tongue_points_have_schema_and_lie_on_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gapmaps"))
        .args(["tongues", "--family", "sts", "--gamma", "0.5", "--window", "beta=0.15:0.4,alpha=0.25:0.35", "--q-max", "1", "--levels", "2"])
        .arg("--out")
        .arg(dir.path())
        .env("GAPMAPS_SEED_GRID", "80")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let d = read_dataset(&dir.path().join("tongues.csv")).unwrap();
    assert_eq!(d.columns, ["p1", "p2", "x", "p", "q", "kind"]);
    assert!(!d.rows.is_empty());
    let (b, a) = (d.floats("p1"), d.floats("p2"));
    for i in 0..b.len() {
        let on_first = (a[i] - std::f64::consts::PI * (1.0 / 3.0 - b[i])).abs() < 1e-6;
        let on_second = (b[i] - 1.0 / 3.0).abs() < 1e-6;
        assert!(on_first || on_second, "({}, {})", b[i], a[i]);
    }
}

#[test]
fn return_map_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gapmaps"))
        .args(["cherry-return", "--mu=-0.0142857142857", "--plot"])
        .arg("--out")
        .arg(dir.path())
        .env("GAPMAPS_SEED_GRID", "200")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let d = read_dataset(&dir.path().join("cherry-return.csv")).unwrap();
    assert_eq!(d.columns, ["y_n", "y_{n+1}", "branch_id"]);
    assert!(d.floats("branch_id").contains(&1.0));
    assert!(dir.path().join("cherry-return.svg").exists());
}

#[test]
fn bad_seed_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gapmaps"))
        .args(["cherry-return"])
        .arg("--out")
        .arg(dir.path())
        .env("GAPMAPS_SEED_GRID", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
