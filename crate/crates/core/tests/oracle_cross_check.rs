//! The finite-difference pencil checked against roots of the hand-derived
//! P0 characteristic function and against the shooting solver.

use bvtp_core::{fixtures, lowest_eigenvalues, oracle_eigenvalues, oracle_solve, PiecewisePolynomial};

fn closed_form(lambda: f64) -> f64 {
    if lambda > 0.0 {
        let s = lambda.sqrt();
        2.0 * lambda * s.cos() + (1.0 / s - lambda * lambda * s) * s.sin()
    } else {
        let sg = (-lambda).sqrt();
        2.0 * lambda * sg.cosh() + sg.sinh() / sg + lambda * lambda * sg * sg.sinh()
    }
}

fn roots(count: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut lo = -50.0;
    while out.len() < count {
        let hi = lo + 1e-2;
        if closed_form(lo).signum() != closed_form(hi).signum() {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if closed_form(m).signum() == closed_form(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        lo = hi;
    }
    out
}

#[test]
fn p0_oracle_matches_closed_form_roots() {
    let p0 = fixtures::validated(fixtures::p0());
    let o = oracle_eigenvalues(&p0, 100, 4).unwrap();
    for (k, r) in roots(4).iter().enumerate() {
        let err = (o.eigenvalues[k] - r).abs();
        assert!(err <= o.error_estimates[k].max(1e-9), "root {k}: {} vs {r}", o.eigenvalues[k]);
        assert!(o.error_estimates[k] < 1e-3);
    }
}

#[test]
fn p2_raw_levels_approach_shooting_values() {
    let p2 = fixtures::validated(fixtures::p2());
    let o = oracle_eigenvalues(&p2, 40, 3).unwrap();
    let s = lowest_eigenvalues(&p2, 3, 1e-12).unwrap().eigenvalues;
    for k in 0..3 {
        let e: Vec<f64> = o.levels.iter().map(|l| (l[k] - s[k]).abs()).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "level errors {e:?}");
        assert!((o.eigenvalues[k] - s[k]).abs() < e[2]);
    }
}

#[test]
fn transparent_interface_leaves_extrapolated_values() {
    let p0 = fixtures::validated(fixtures::p0());
    let p1 = fixtures::validated(fixtures::p1());
    let a = oracle_eigenvalues(&p0, 200, 3).unwrap().eigenvalues;
    let b = oracle_eigenvalues(&p1, 200, 3).unwrap().eigenvalues;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn p2_drift_is_second_order() {
    let p2 = fixtures::validated(fixtures::p2());
    let o = oracle_eigenvalues(&p2, 100, 5).unwrap();
    assert!(o.max_imaginary < 1e-8);
    for r in &o.convergence_ratios {
        assert!((3.0..=5.0).contains(r), "ratio {r}");
    }
}

#[test]
fn oracle_solution_carries_the_jump() {
    let p2 = fixtures::validated(fixtures::p2());
    let one = PiecewisePolynomial::constant(&p2, 1.0);
    let s = oracle_solve(&p2, -3.0, &one, 400).unwrap();
    let (l, r) = (&s.values[0], &s.values[1]);
    let h = |g: &Vec<f64>| g[1] - g[0];
    let n = l.len() - 1;
    let slope_left = (0.5 * l[n - 2] - 2.0 * l[n - 1] + 1.5 * l[n]) / h(&s.grid[0]);
    let slope_right = (-1.5 * r[0] + 2.0 * r[1] - 0.5 * r[2]) / h(&s.grid[1]);
    assert!((r[0] / l[n] - 2.0).abs() < 1e-3);
    assert!((slope_right / slope_left - 0.5).abs() < 1e-3);
}
