//! The invariant suite behind `bvtp verify`.

use std::sync::Arc;
use std::time::Instant;

use bvtp_core::{
    boundary_identity_check, build_chi, build_phi, characteristic, gram_matrix, lowest_eigenvalues,
    oracle_eigenvalues, oracle_solve, resolvent_selfadjointness_check, solve_resolvent,
    wronskian_transmission_identity, Complex64, EigenBasis, GreensKernel, PiecewiseFunction,
    PiecewisePolynomial, Polynomial, ValidatedProblem, ValuePair,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::output::{emit, Manifest};
use crate::{CliError, Common};

struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    note: String,
}

impl Check {
    fn new(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            note: String::new(),
        }
    }

    fn passed(&self) -> bool {
        self.value < self.limit
    }

    fn to_json(&self) -> Value {
        json!({
            "check": self.name,
            "value": if self.value.is_finite() { json!(self.value) } else { json!(format!("{:?}", self.value)) },
            "limit": self.limit,
            "passed": self.passed(),
            "note": self.note,
        })
    }
}

const EIGEN_COUNT: usize = 4;
const ORACLE_EIGEN_N: usize = 100;
const ORACLE_SOLVE_N: usize = 2000;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn recursion(pr: &ValidatedProblem, tol: f64) -> bvtp_core::Result<Check> {
    let mut lambdas: Vec<Complex64> = (0..12).map(|k| c(-10.0 + 110.0 * k as f64 / 11.0)).collect();
    lambdas.extend([Complex64::new(0.0, 3.0), Complex64::new(0.0, -3.0), Complex64::new(1.0, 2.0)]);
    let mut worst: f64 = 0.0;
    for l in lambdas {
        worst = worst.max(characteristic(pr, l, tol)?.recursion_violation);
    }
    Ok(Check::new("wronskian_recursion", worst, 1e-9))
}

fn boundary_identities(pr: &ValidatedProblem) -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut pair = || {
        let mut z = || Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        ValuePair::new(z(), z())
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (l, r) = boundary_identity_check(pr, pair(), pair(), pair(), pair());
        worst = worst.max(l).max(r);
    }
    Check::new("boundary_identities", worst, 1e-12)
}

fn transmission_identity(pr: &ValidatedProblem, tol: f64) -> bvtp_core::Result<Check> {
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let l = c(-10.0 + 110.0 * k as f64 / 9.0 + 0.123);
        let phi = build_phi(pr, l, tol)?;
        let chi = build_chi(pr, l, tol)?;
        for i in 0..pr.n_interfaces() {
            worst = worst.max(wronskian_transmission_identity(pr, &phi, &chi, i));
            worst = worst.max(wronskian_transmission_identity(pr, &phi, &phi, i));
        }
    }
    let mut chk = Check::new("transmission_wronskian_identity", worst, 1e-9);
    if pr.n_interfaces() == 0 {
        chk.note = "no interfaces".into();
    }
    Ok(chk)
}

fn orthogonality(pr: &ValidatedProblem, tol: f64) -> bvtp_core::Result<Check> {
    let basis = EigenBasis::lowest(pr, EIGEN_COUNT, tol)?;
    let g = gram_matrix(pr, &basis.functions, 1e-10)?;
    let mut worst: f64 = 0.0;
    for (j, row) in g.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            worst = worst.max((v - if j == k { 1.0 } else { 0.0 }).norm());
        }
    }
    Ok(Check::new("orthonormality", worst, 1e-5))
}

fn eigen_oracle(pr: &ValidatedProblem, lowest: &[f64]) -> bvtp_core::Result<Check> {
    let k = lowest.len().min(3);
    let o = oracle_eigenvalues(pr, ORACLE_EIGEN_N, k)?;
    let mut worst: f64 = 0.0;
    for (j, l) in lowest.iter().take(k).enumerate() {
        worst = worst.max((l - o.eigenvalues[j]).abs() / o.error_estimates[j]);
    }
    let mut chk = Check::new("eigenvalue_oracle_agreement", worst, 1.0);
    chk.note = "largest |shooting - oracle| / oracle error estimate".into();
    if !o.spurious.is_empty() {
        chk.value = f64::INFINITY;
        chk.note = o.warnings().join("; ");
    }
    Ok(chk)
}

fn resolvent_checks(pr: &ValidatedProblem, shifts: &[f64], tol: f64) -> bvtp_core::Result<Vec<Check>> {
    let one: Arc<dyn PiecewiseFunction> = Arc::new(PiecewisePolynomial::constant(pr, 1.0));
    let (mut ode, mut bc, mut tr, mut diff) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for &l in shifts {
        let u = solve_resolvent(pr, c(l), one.clone(), tol)?;
        ode = ode.max(u.residual_ode);
        bc = bc.max(u.residual_bc);
        tr = tr.max(u.residual_trans);
        let o = oracle_solve(pr, l, one.as_ref(), ORACLE_SOLVE_N)?;
        for (p, (xs, vs)) in o.grid.iter().zip(&o.values).enumerate() {
            for (&x, &v) in xs.iter().zip(vs) {
                diff = diff.max((u.value(p, x) - v).norm());
            }
        }
    }
    Ok(vec![
        Check::new("resolvent_ode_residual", ode, 1e-6),
        Check::new("resolvent_bc_residual", bc, 1e-6),
        Check::new("resolvent_transmission_residual", tr, 1e-7),
        Check::new("resolvent_oracle_agreement", diff, 1e-5),
    ])
}

fn kernel_symmetry(pr: &ValidatedProblem, lambda: f64, tol: f64) -> bvtp_core::Result<Check> {
    let k = GreensKernel::new(pr, c(lambda), tol)?;
    let (a, b) = (pr.a(), pr.b());
    // Offsets irrational relative to the partition keep the points off the interfaces.
    let pts: Vec<f64> = (0..9)
        .map(|i| a + (b - a) * (0.0311 + 0.9378 * i as f64 / 8.0))
        .filter(|x| !pr.partition().contains(x))
        .collect();
    let mut worst: f64 = 0.0;
    for &x in &pts {
        for &y in &pts {
            let gxy = k.eval(x, y)?;
            let gyx = k.eval(y, x)?;
            let l = gxy.value * pr.weight(gxy.pieces_used.0);
            let r = gyx.value * pr.weight(gyx.pieces_used.0);
            let s = l.norm().max(r.norm());
            if s > 0.0 {
                worst = worst.max((l - r).norm() / s);
            }
        }
    }
    Ok(Check::new("weighted_kernel_symmetry", worst, 1e-8))
}

fn selfadjointness(pr: &ValidatedProblem, lambda: f64, tol: f64) -> bvtp_core::Result<Check> {
    let poly = |cs: Vec<f64>| -> Arc<dyn PiecewiseFunction> {
        Arc::new(PiecewisePolynomial::uniform(pr, Polynomial::new(cs)))
    };
    let mut worst: f64 = 0.0;
    for g in [vec![0.0, 1.0], vec![0.0, 0.0, 1.0]] {
        worst = worst.max(resolvent_selfadjointness_check(pr, lambda, poly(vec![1.0]), poly(g), tol)?);
    }
    Ok(Check::new("resolvent_selfadjointness", worst, 1e-6))
}

/// Records a check that could not be evaluated as failed.
fn attempt(checks: &mut Vec<Check>, name: &'static str, r: bvtp_core::Result<Vec<Check>>) {
    match r {
        Ok(cs) => checks.extend(cs),
        Err(e) => {
            let mut chk = Check::new(name, f64::INFINITY, 0.0);
            chk.note = e.to_string();
            checks.push(chk);
        }
    }
}

pub fn verify(common: &Common) -> Result<(), CliError> {
    let start = Instant::now();
    let pr = bvtp_core::load_problem(&common.problem)?;
    let tol = common.tol;
    let mut checks = Vec::new();

    common.progress("characteristic function and identities");
    attempt(&mut checks, "wronskian_recursion", recursion(&pr, tol).map(|c| vec![c]));
    checks.push(boundary_identities(&pr));
    attempt(&mut checks, "transmission_wronskian_identity", transmission_identity(&pr, tol).map(|c| vec![c]));

    common.progress("eigenvalues and eigenfunctions");
    let lowest = lowest_eigenvalues(&pr, EIGEN_COUNT, tol).map(|s| s.eigenvalues);
    attempt(&mut checks, "orthonormality", orthogonality(&pr, tol).map(|c| vec![c]));

    match lowest {
        Ok(ev) => {
            common.progress("finite-difference oracle");
            attempt(&mut checks, "eigenvalue_oracle_agreement", eigen_oracle(&pr, &ev).map(|c| vec![c]));
            // Shifts below the spectrum are always in the resolvent set.
            let shifts = [ev[0] - 1.0, ev[0] - 3.0];
            common.progress("resolvent");
            attempt(&mut checks, "resolvent", resolvent_checks(&pr, &shifts, tol));
            attempt(&mut checks, "weighted_kernel_symmetry", kernel_symmetry(&pr, shifts[0], tol).map(|c| vec![c]));
            attempt(&mut checks, "resolvent_selfadjointness", selfadjointness(&pr, shifts[0], tol).map(|c| vec![c]));
        }
        Err(e) => {
            let mut chk = Check::new("lowest_eigenvalues", f64::INFINITY, 0.0);
            chk.note = e.to_string();
            checks.push(chk);
        }
    }

    let failed = checks.iter().filter(|c| !c.passed()).count();
    let mut m = Manifest::new(common.problem.clone(), "verify", common.out.clone(), crate::output::Format::JsonLines);
    m.option("tol", tol).diagnostic("failed", failed).diagnostic("checks", checks.len());
    m.duration = start.elapsed();
    let mut text = json!({ "manifest": m.to_json() }).to_string();
    text.push('\n');
    for chk in &checks {
        if !common.quiet || !chk.passed() {
            let note = if chk.note.is_empty() { String::new() } else { format!(": {}", chk.note) };
            eprintln!(
                "bvtp: {} {} ({:e}, limit {:e}){note}",
                if chk.passed() { "pass" } else { "FAIL" },
                chk.name,
                chk.value,
                chk.limit
            );
        }
        text.push_str(&chk.to_json().to_string());
        text.push('\n');
    }
    text.push_str(&json!({ "summary": { "checks": checks.len(), "failed": failed } }).to_string());
    text.push('\n');
    emit(common.out.as_ref(), &text)?;
    if failed > 0 {
        return Err(CliError::Verification { failed });
    }
    Ok(())
}
