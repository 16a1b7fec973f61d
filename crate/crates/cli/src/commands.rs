use std::sync::Arc;
use std::time::Instant;

use bvtp_core::hilbert::{expansion_coefficients, expansion_residual};
use bvtp_core::{
    characteristic, eigenvalues, load_problem, lowest_eigenvalues, normalized_eigenfunction, solve_resolvent,
    AugmentedFunction, Complex64, EigenBasis, GreensKernel, PiecewiseFunction, Spectrum, ValidatedProblem,
};
use serde_json::json;

use crate::output::{emit, Manifest, Table};
use crate::rhs::parse_rhs;
use crate::{CliError, Common};

fn load(common: &Common) -> Result<ValidatedProblem, CliError> {
    Ok(load_problem(&common.problem)?)
}

fn manifest(common: &Common, command: &'static str) -> Manifest {
    let mut m = Manifest::new(common.problem.clone(), command, common.out.clone(), common.format);
    m.option("tol", common.tol);
    m
}

fn finish(common: &Common, mut m: Manifest, table: Table, start: Instant) -> Result<(), CliError> {
    m.duration = start.elapsed();
    emit(common.out.as_ref(), &table.render(&m))?;
    Ok(())
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Input(msg()))
    }
}

fn window_ok(w: (f64, f64)) -> Result<(), CliError> {
    require(w.0.is_finite() && w.1.is_finite() && w.0 < w.1, || {
        format!("window [{}, {}] must satisfy lo < hi", w.0, w.1)
    })
}

/// `count` equally spaced points of `[lo, hi]`, endpoints included.
fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

pub fn validate(common: &Common) -> Result<(), CliError> {
    let start = Instant::now();
    let pr = load(common)?;
    let mut m = manifest(common, "validate");
    m.duration = start.elapsed();
    let mut s = String::new();
    if let serde_json::Value::Object(obj) = m.to_json() {
        for (k, v) in obj {
            s.push_str(&format!("# {k}: {v}\n"));
        }
    }
    s.push_str(&format!("kappa1={} kappa2={}\n", pr.kappa1(), pr.kappa2()));
    for i in 0..pr.n_interfaces() {
        s.push_str(&format!("interface {} xi={}", i + 1, pr.partition()[i + 1]));
        for (j, k) in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)] {
            s.push_str(&format!(" theta{j}{k}={}", pr.theta(i, j, k)));
        }
        s.push('\n');
    }
    for (p, w) in pr.weights().iter().enumerate() {
        s.push_str(&format!("piece {} weight={w}\n", p + 1));
    }
    s.push_str(&format!(
        "boundary weights left={} right={}\n",
        pr.left_boundary_weight(),
        pr.right_boundary_weight()
    ));
    emit(common.out.as_ref(), &s)?;
    Ok(())
}

pub fn charfn(common: &Common, window: (f64, f64), grid: usize, imag: f64) -> Result<(), CliError> {
    let start = Instant::now();
    window_ok(window)?;
    require(grid >= 2, || "grid must be at least 2".into())?;
    let pr = load(common)?;
    common.progress(&format!("sampling omega at {grid} points"));
    let mut table = Table::new(&["lambda_re", "lambda_im", "omega_re", "omega_im", "recursion_violation"]);
    for re in linspace(window.0, window.1, grid) {
        let l = Complex64::new(re, imag);
        let cv = characteristic(&pr, l, common.tol)?;
        table.push(vec![
            re.into(),
            imag.into(),
            cv.omega.re.into(),
            cv.omega.im.into(),
            cv.recursion_violation.into(),
        ]);
    }
    let mut m = manifest(common, "charfn");
    m.option("window", json!([window.0, window.1]))
        .option("grid", grid)
        .option("imag", imag);
    finish(common, m, table, start)
}

pub fn eigs(common: &Common, window: Option<(f64, f64)>, grid: usize, count: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    let pr = load(common)?;
    let mut m = manifest(common, "eigs");
    let spectrum: Spectrum = match window {
        Some(w) => {
            window_ok(w)?;
            require(grid >= 2, || "grid must be at least 2".into())?;
            m.option("window", json!([w.0, w.1])).option("grid", grid);
            common.progress(&format!("scanning [{}, {}] with {grid} samples", w.0, w.1));
            eigenvalues(&pr, w, grid, common.tol)?
        }
        None => {
            let n = count.unwrap_or(10);
            require(n >= 1, || "count must be at least 1".into())?;
            m.option("count", n);
            common.progress(&format!("locating the {n} lowest eigenvalues"));
            lowest_eigenvalues(&pr, n, common.tol)?
        }
    };
    for w in &spectrum.warnings {
        eprintln!("bvtp: warning: {w}");
    }
    let mut table = Table::new(&["index", "lambda", "abs_omega", "bracket_lo", "bracket_hi", "iterations"]);
    for (k, d) in spectrum.diagnostics.iter().enumerate() {
        table.push(vec![
            (k + 1).into(),
            d.lambda.into(),
            d.abs_omega.into(),
            d.bracket.0.into(),
            d.bracket.1.into(),
            d.iterations.into(),
        ]);
    }
    finish(common, m, table, start)
}

pub fn eigenfunction(common: &Common, index: Option<usize>, lambda: Option<f64>, points: usize) -> Result<(), CliError> {
    let start = Instant::now();
    require(points >= 2, || "points must be at least 2".into())?;
    let pr = load(common)?;
    let mut m = manifest(common, "eigenfunction");
    let lambda = match (index, lambda) {
        (Some(k), _) => {
            require(k >= 1, || "index is 1-based".into())?;
            m.option("index", k);
            common.progress(&format!("locating eigenvalue {k}"));
            lowest_eigenvalues(&pr, k, common.tol)?.eigenvalues[k - 1]
        }
        (None, Some(l)) => l,
        (None, None) => return Err(CliError::Input("either --index or --lambda is required".into())),
    };
    m.option("points", points);
    let ef = normalized_eigenfunction(&pr, lambda, common.tol)?;
    m.diagnostic("lambda", ef.lambda)
        .diagnostic("f1", json!([ef.f1.re, ef.f1.im]))
        .diagnostic("f2", json!([ef.f2.re, ef.f2.im]))
        .diagnostic("boundary_residual", ef.boundary_residual);
    let mut table = Table::new(&["piece", "x", "u_re", "u_im", "du_re", "du_im"]);
    for p in 0..pr.n_pieces() {
        let (lo, hi) = pr.piece_bounds(p);
        for x in linspace(lo, hi, points) {
            let v = ef.eval(p, x);
            table.push(vec![(p + 1).into(), x.into(), v.u.re.into(), v.u.im.into(), v.du.re.into(), v.du.im.into()]);
        }
    }
    finish(common, m, table, start)
}

pub fn green(common: &Common, lambda: f64, imag: f64, grid: usize) -> Result<(), CliError> {
    let start = Instant::now();
    require(grid >= 2, || "grid must be at least 2".into())?;
    let pr = load(common)?;
    let l = Complex64::new(lambda, imag);
    let kernel = GreensKernel::new(&pr, l, common.tol)?;
    // Interface points are assigned to the piece on their left.
    let pts: Vec<(usize, f64)> = linspace(pr.a(), pr.b(), grid)
        .into_iter()
        .map(|x| pr.piece_of_left(x).map(|p| (p, x)))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["x", "y", "piece_x", "piece_y", "g_re", "g_im", "weight_x"]);
    for &(px, x) in &pts {
        for &(py, y) in &pts {
            let g = kernel.eval_in(px, x, py, y)?;
            table.push(vec![
                x.into(),
                y.into(),
                (px + 1).into(),
                (py + 1).into(),
                g.value.re.into(),
                g.value.im.into(),
                pr.weight(px).into(),
            ]);
        }
    }
    let mut m = manifest(common, "green");
    m.option("lambda", json!([lambda, imag])).option("grid", grid);
    finish(common, m, table, start)
}

pub fn solve(common: &Common, lambda: f64, imag: f64, f: &str, points: usize) -> Result<(), CliError> {
    let start = Instant::now();
    require(points >= 2, || "points must be at least 2".into())?;
    let pr = load(common)?;
    let rhs = Arc::new(parse_rhs(f, &pr)?);
    let u = solve_resolvent(&pr, Complex64::new(lambda, imag), rhs, common.tol)?;
    let mut m = manifest(common, "solve");
    m.option("lambda", json!([lambda, imag]))
        .option("f", f)
        .option("points", points)
        .diagnostic("residual_ode", u.residual_ode)
        .diagnostic("residual_bc", u.residual_bc)
        .diagnostic("residual_trans", u.residual_trans);
    common.progress(&format!(
        "residuals: ode {:e}, bc {:e}, transmission {:e}",
        u.residual_ode, u.residual_bc, u.residual_trans
    ));
    let mut table = Table::new(&["piece", "x", "u_re", "u_im", "du_re", "du_im"]);
    for p in 0..pr.n_pieces() {
        let (lo, hi) = pr.piece_bounds(p);
        for x in linspace(lo, hi, points) {
            let v = u.eval(p, x);
            table.push(vec![(p + 1).into(), x.into(), v.u.re.into(), v.u.im.into(), v.du.re.into(), v.du.im.into()]);
        }
    }
    finish(common, m, table, start)
}

pub fn expand(common: &Common, n: usize, f: &str) -> Result<(), CliError> {
    let start = Instant::now();
    require(n >= 1, || "n must be at least 1".into())?;
    let pr = load(common)?;
    let rhs = parse_rhs(f, &pr)?;
    let fa = AugmentedFunction::plain(Arc::new(rhs) as Arc<dyn PiecewiseFunction>);
    common.progress(&format!("computing {n} eigenfunctions"));
    let basis = EigenBasis::lowest(&pr, n, common.tol)?;
    let quad = 1e-11;
    let coeffs = expansion_coefficients(&pr, &fa, &basis.functions, quad)?;
    let norm = expansion_residual(&pr, &fa, &[], &[], quad)?;
    let mut table = Table::new(&["index", "lambda", "coefficient_re", "coefficient_im", "residual"]);
    for k in 0..n {
        let r = expansion_residual(&pr, &fa, &basis.functions[..=k], &coeffs[..=k], quad)?;
        table.push(vec![
            (k + 1).into(),
            basis.eigenvalues[k].into(),
            coeffs[k].re.into(),
            coeffs[k].im.into(),
            r.into(),
        ]);
    }
    let mut m = manifest(common, "expand");
    m.option("n", n).option("f", f).diagnostic("norm_f", norm);
    finish(common, m, table, start)
}
