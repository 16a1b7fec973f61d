use std::path::PathBuf;
use std::process::{Command, Output};

use bvtp_core::{fixtures, oracle_eigenvalues};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn bvtp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvtp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV output, manifest and header stripped.
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

fn p0_omega(lambda: f64) -> f64 {
    let s = lambda.sqrt();
    2.0 * lambda * s.cos() + (1.0 / s - lambda * lambda * s) * s.sin()
}

#[test]
fn validate_prints_kappas() {
    let o = bvtp(&["validate", fixture("p0.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("kappa1=1 kappa2=1"));
}

#[test]
fn validate_reports_degenerate_theta() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flipped.toml");
    let text = std::fs::read_to_string(fixture("p2.toml"))
        .unwrap()
        .replace("row2 = [0.0, 1.0, 0.0, -2.0]", "row2 = [0.0, -1.0, 0.0, 2.0]");
    std::fs::write(&path, text).unwrap();
    let o = bvtp(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("ThetaDegenerate") && err.contains("interface 1"), "{err}");
}

#[test]
fn validate_names_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing.toml");
    let text = std::fs::read_to_string(fixture("p0.toml")).unwrap().replace("gamma4 = -1.0\n", "");
    std::fs::write(&path, text).unwrap();
    let o = bvtp(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma4"), "{}", stderr(&o));
}

#[test]
fn eigs_p0_matches_closed_form_roots() {
    let o = bvtp(&["eigs", fixture("p0.toml").to_str().unwrap(), "--window", "0", "150", "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lambdas = column(&csv_rows(&stdout(&o)), 1);
    assert_eq!(lambdas.len(), 4);
    for l in lambdas {
        // the closed form changes sign across every reported root
        assert!(p0_omega(l - 1e-9).signum() != p0_omega(l + 1e-9).signum(), "{l}");
    }
}

#[test]
fn eigs_transparent_interface_matches_p0() {
    let run = |f: &str| {
        let o = bvtp(&["eigs", fixture(f).to_str().unwrap(), "--count", "8", "-q"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        column(&csv_rows(&stdout(&o)), 1)
    };
    let (a, b) = (run("p0.toml"), run("p1.toml"));
    assert_eq!(a.len(), 8);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn eigs_p2_agree_with_oracle() {
    let o = bvtp(&["eigs", fixture("p2.toml").to_str().unwrap(), "--window", "-5", "100", "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lambdas = column(&csv_rows(&stdout(&o)), 1);
    assert_eq!(lambdas.len(), 7);
    let oracle = oracle_eigenvalues(&fixtures::validated(fixtures::p2()), 100, 7).unwrap();
    for (k, l) in lambdas.iter().enumerate() {
        assert!((l - oracle.eigenvalues[k]).abs() <= oracle.error_estimates[k], "{k}: {l}");
    }
}

#[test]
fn output_is_deterministic_apart_from_timing() {
    let run = || {
        let o = bvtp(&["eigs", fixture("p2.toml").to_str().unwrap(), "--count", "6", "-q"]);
        stdout(&o)
            .lines()
            .filter(|l| !l.starts_with("# duration_seconds"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run(), run());
}

#[test]
fn green_grid_is_weighted_symmetric() {
    let o = bvtp(&["green", fixture("p0.toml").to_str().unwrap(), "--lambda", "-1", "--grid", "21"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 441);
    let at = |i: usize, j: usize| &rows[i * 21 + j];
    for i in 0..21 {
        for j in 0..21 {
            let (a, b) = (at(i, j), at(j, i));
            let (wa, wb) = (a[4] * a[6], b[4] * b[6]);
            assert!((wa - wb).abs() <= 1e-8 * wa.abs().max(wb.abs()), "{i},{j}");
        }
    }
}

#[test]
fn green_handles_interface_grid_points() {
    let o = bvtp(&["green", fixture("p2.toml").to_str().unwrap(), "--lambda", "-2", "--grid", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o)).len(), 25);
}

#[test]
fn expand_residuals_decrease() {
    let o = bvtp(&["expand", fixture("p0.toml").to_str().unwrap(), "--n", "10", "--f", "poly:0,1,-1", "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    for w in rows.windows(2) {
        let coefficient = w[1][2].hypot(w[1][3]);
        assert!(w[1][4] <= w[0][4] * (1.0 + 1e-9));
        if coefficient > 1e-8 {
            assert!(w[1][4] < w[0][4], "{:?}", w);
        }
    }
    assert!(rows[9][4] < rows[0][4]);
}

#[test]
fn solve_writes_jsonl_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.jsonl");
    let o = bvtp(&[
        "solve",
        fixture("p2.toml").to_str().unwrap(),
        "--lambda",
        "-3",
        "--f",
        "const:1",
        "--points",
        "11",
        "--format",
        "jsonl",
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1 + 22);
    let m = &lines[0]["manifest"];
    assert_eq!(m["command"], "solve");
    assert!(m["diagnostics"]["residual_ode"].as_f64().unwrap() < 1e-6);
    assert!(lines[1]["u_re"].is_number());
}

#[test]
fn solve_at_eigenvalue_is_numerical_failure() {
    let o = bvtp(&["eigs", fixture("p0.toml").to_str().unwrap(), "--count", "1", "-q"]);
    let l = csv_rows(&stdout(&o))[0][1].to_string();
    let o = bvtp(&["solve", fixture("p0.toml").to_str().unwrap(), "--lambda", &l, "-q"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_input_exits_with_one() {
    let p0 = fixture("p0.toml");
    let p0 = p0.to_str().unwrap();
    assert_eq!(bvtp(&["solve", p0, "--lambda", "-1", "--f", "sin:1"]).status.code(), Some(1));
    assert_eq!(bvtp(&["eigs", p0, "--window", "5", "1"]).status.code(), Some(1));
    assert_eq!(bvtp(&["frobnicate", p0]).status.code(), Some(1));
    assert_eq!(bvtp(&["eigs", "/nonexistent.toml"]).status.code(), Some(1));
}

#[test]
fn verify_p0_passes() {
    let o = bvtp(&["verify", fixture("p0.toml").to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let last: Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(last["summary"]["failed"], 0);
}

#[test]
fn verify_failures_set_exit_code() {
    let o = bvtp(&["verify", fixture("p2.toml").to_str().unwrap(), "-q", "--tol", "1e-3"]);
    let last: Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    let failed = last["summary"]["failed"].as_u64().unwrap() as i32;
    assert!(failed > 0);
    assert_eq!(o.status.code(), Some(2 + failed));
}

#[test]
fn charfn_samples_p0() {
    let o = bvtp(&["charfn", fixture("p0.toml").to_str().unwrap(), "--window", "0.5", "4", "--grid", "8", "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for r in csv_rows(&stdout(&o)) {
        let w = p0_omega(r[0]);
        assert!((r[2] - w).abs() <= 1e-8 * w.abs().max(1.0), "{r:?}");
    }
}

#[test]
fn eigenfunction_dump_has_all_pieces() {
    let o = bvtp(&["eigenfunction", fixture("p2.toml").to_str().unwrap(), "--index", "2", "--points", "5", "-q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    // u(0+) = 2 u(0-)
    let (left, right) = (&rows[4], &rows[5]);
    assert_eq!(left[1], 0.0);
    assert!((right[2] - 2.0 * left[2]).abs() < 1e-10);
}
