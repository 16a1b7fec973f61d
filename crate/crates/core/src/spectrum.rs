//! Real eigenvalues as zeros of the characteristic function, and normalized
//! eigenfunctions.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::{AugmentedFunction, PiecewiseFunction};
use crate::fundamental::{build_phi, characteristic, PiecewiseSolution};
use crate::hilbert::{boundary_functional, inner_h, BoundaryFunctional};
use crate::integrator::ValuePair;
use crate::problem::ValidatedProblem;
use crate::roots::brent;

const MAX_REFINE_ITERATIONS: usize = 200;

/// Relative right-boundary residual above which a candidate is not an eigenvalue.
pub const EIGEN_RESIDUAL_LIMIT: f64 = 1e-6;

/// Quadrature tolerance used when normalizing eigenfunctions.
pub const NORMALIZATION_QUAD_TOL: f64 = 1e-11;

/// Samples per window in [`lowest_eigenvalues`].
const SCAN_POINTS: usize = 64;

/// Diagnostics of one refined root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootDiagnostics {
    pub lambda: f64,
    /// Sampling bracket the root was refined from.
    pub bracket: (f64, f64),
    /// `|omega(lambda)|` at the returned root.
    pub abs_omega: f64,
    pub iterations: usize,
}

/// Eigenvalues found in a search window, in increasing order.
#[derive(Clone, Debug, Default)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Vec<RootDiagnostics>,
    pub search_window: (f64, f64),
    pub grid_points: usize,
    /// Suspicious findings (near-coincident roots), not errors.
    pub warnings: Vec<String>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn omega_real(problem: &ValidatedProblem, lambda: f64, tol: f64) -> Result<f64> {
    let w = characteristic(problem, Complex64::new(lambda, 0.0), tol)?.omega;
    debug_assert!(w.im.abs() <= 1e-10 * w.norm(), "omega({lambda}) = {w} is not real");
    Ok(w.re)
}

/// `omega` on `count` equally spaced real points of `window`.
pub fn sample_characteristic(
    problem: &ValidatedProblem,
    window: (f64, f64),
    count: usize,
    tol: f64,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = window;
    if count < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidProblem(format!(
            "sampling needs count >= 2 and lo < hi, got count {count}, window [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let l = if k + 1 == count { hi } else { lo + step * k as f64 };
            omega_real(problem, l, tol).map(|w| (l, w))
        })
        .collect()
}

/// One bracket per sign change of the samples; a sample that is exactly zero
/// gives the degenerate bracket `(l, l)`.
pub fn bracket_roots(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (k, &(l, w)) in samples.iter().enumerate() {
        if w == 0.0 {
            out.push((l, l));
            continue;
        }
        if let Some(&(l2, w2)) = samples.get(k + 1) {
            if w2 != 0.0 && w.signum() != w2.signum() {
                out.push((l, l2));
            }
        }
    }
    out
}

/// Refines one bracket to a root with absolute precision `tol`; `tol` is
/// also the integrator tolerance.
pub fn refine_root(problem: &ValidatedProblem, bracket: (f64, f64), tol: f64) -> Result<RootDiagnostics> {
    let (lo, hi) = bracket;
    let f = |l: f64| omega_real(problem, l, tol);
    if lo == hi {
        let (wm, wp) = (f(lo - tol)?, f(lo + tol)?);
        if wm == 0.0 || wp == 0.0 || wm.signum() != wp.signum() {
            return Ok(RootDiagnostics {
                lambda: lo,
                bracket,
                abs_omega: f(lo)?.abs(),
                iterations: 0,
            });
        }
        return Err(Error::MaxIterations { lo, hi, iterations: 0 });
    }
    let r = brent(f, lo, hi, f(lo)?, f(hi)?, tol, MAX_REFINE_ITERATIONS)?;
    Ok(RootDiagnostics {
        lambda: r.root,
        bracket,
        abs_omega: r.value.abs(),
        iterations: r.iterations,
    })
}

fn collect_roots(problem: &ValidatedProblem, brackets: &[(f64, f64)], tol: f64) -> Result<Vec<RootDiagnostics>> {
    let mut roots = brackets
        .par_iter()
        .map(|&b| refine_root(problem, b, tol))
        .collect::<Result<Vec<_>>>()?;
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(roots)
}

fn assemble(roots: Vec<RootDiagnostics>, window: (f64, f64), grid: usize, tol: f64) -> Spectrum {
    let mut diagnostics: Vec<RootDiagnostics> = Vec::with_capacity(roots.len());
    let mut warnings = Vec::new();
    for r in roots {
        if let Some(prev) = diagnostics.last() {
            let gap = r.lambda - prev.lambda;
            if gap <= tol {
                continue;
            }
            if gap <= 100.0 * tol {
                warnings.push(format!(
                    "eigenvalues {} and {} are within {gap:e}; a pair may have been missed",
                    prev.lambda, r.lambda
                ));
            }
        }
        diagnostics.push(r);
    }
    Spectrum {
        eigenvalues: diagnostics.iter().map(|d| d.lambda).collect(),
        diagnostics,
        search_window: window,
        grid_points: grid,
        warnings,
    }
}

/// All eigenvalues whose sign change is resolved by `grid` samples of `window`.
pub fn eigenvalues(problem: &ValidatedProblem, window: (f64, f64), grid: usize, tol: f64) -> Result<Spectrum> {
    let samples = sample_characteristic(problem, window, grid, tol)?;
    let roots = collect_roots(problem, &bracket_roots(&samples), tol)?;
    Ok(assemble(roots, window, grid, tol))
}

/// Travel time `sum (xi_i - xi_{i-1}) / rho_i`; for large `lambda` the
/// roots are spaced roughly `pi / T` apart in `sqrt(lambda)`.
fn travel_time(problem: &ValidatedProblem) -> f64 {
    (0..problem.n_pieces())
        .map(|p| {
            let (lo, hi) = problem.piece_bounds(p);
            (hi - lo) / problem.rho(p)
        })
        .sum()
}

fn scan_window(problem: &ValidatedProblem, lambdas: Vec<f64>, tol: f64) -> Result<Vec<RootDiagnostics>> {
    let samples = lambdas
        .into_par_iter()
        .map(|l| omega_real(problem, l, tol).map(|w| (l, w)))
        .collect::<Result<Vec<_>>>()?;
    collect_roots(problem, &bracket_roots(&samples), tol)
}

/// The `count` lowest eigenvalues.
///
/// Negative `lambda` is scanned in windows `[-4^(k+1), -4^k]` until two
/// consecutive windows are empty; non-negative `lambda` is scanned uniformly
/// in `sqrt(lambda)` with about eight samples per expected root spacing.
pub fn lowest_eigenvalues(problem: &ValidatedProblem, count: usize, tol: f64) -> Result<Spectrum> {
    const LAMBDA_LIMIT: f64 = 1e8;
    let mut roots = Vec::new();

    let mut empty = 0;
    let mut lo_edge = 0.0;
    let mut hi = 0.0;
    let mut lo = -1.0;
    while empty < 2 && lo >= -LAMBDA_LIMIT {
        let pts = (0..=SCAN_POINTS).map(|k| lo + (hi - lo) * k as f64 / SCAN_POINTS as f64).collect();
        let found = scan_window(problem, pts, tol)?;
        empty = if found.is_empty() { empty + 1 } else { 0 };
        roots.extend(found);
        lo_edge = lo;
        hi = lo;
        lo *= 4.0;
    }

    let ds = std::f64::consts::PI / travel_time(problem) * 8.0;
    let mut s0: f64 = 0.0;
    while roots.len() < count {
        let pts: Vec<f64> = (0..=SCAN_POINTS)
            .map(|k| (s0 + ds * k as f64 / SCAN_POINTS as f64).powi(2))
            .collect();
        if pts[0] > LAMBDA_LIMIT {
            break;
        }
        roots.extend(scan_window(problem, pts, tol)?);
        roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        roots.dedup_by(|b, a| (b.lambda - a.lambda).abs() <= tol);
        s0 += ds;
    }
    roots.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let hi_edge = s0 * s0;
    let mut spectrum = assemble(roots, (lo_edge, hi_edge), 0, tol);
    if spectrum.len() < count {
        return Err(Error::InsufficientEigenvalues {
            requested: count,
            found: spectrum.len(),
        });
    }
    spectrum.eigenvalues.truncate(count);
    spectrum.diagnostics.truncate(count);
    Ok(spectrum)
}

/// A normalized eigenfunction with access to derivatives.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub lambda: f64,
    solution: Arc<PiecewiseSolution>,
    scale: Complex64,
    /// `B'_a` of the scaled function.
    pub f1: Complex64,
    /// `-B'_b` of the scaled function.
    pub f2: Complex64,
    /// Relative residual of the right boundary condition.
    pub boundary_residual: f64,
}

impl Eigenfunction {
    pub fn eval(&self, piece: usize, x: f64) -> ValuePair {
        self.solution.eval(piece, x) * self.scale
    }

    /// Normalizing factor applied to `phi(., lambda)`.
    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn augmented(&self) -> AugmentedFunction {
        AugmentedFunction::new(Arc::new(self.clone()), self.f1, self.f2)
    }
}

impl PiecewiseFunction for Eigenfunction {
    fn n_pieces(&self) -> usize {
        self.solution.pieces().len()
    }

    fn value(&self, piece: usize, x: f64) -> Complex64 {
        self.solution.value(piece, x) * self.scale
    }

    fn knots(&self, piece: usize) -> Vec<f64> {
        self.solution.knots(piece)
    }
}

/// Relative residual of the right boundary condition for `v = phi(b)`.
fn right_bc_residual(problem: &ValidatedProblem, v: ValuePair, lambda: f64) -> f64 {
    let b = boundary_functional(problem, v, BoundaryFunctional::Bb);
    let bp = boundary_functional(problem, v, BoundaryFunctional::BbPrime);
    let [g1, g2, g3, g4] = problem.gamma();
    let scale = (v.u.norm() * (g1.abs() + lambda.abs() * g3.abs()))
        + (v.du.norm() * (g2.abs() + lambda.abs() * g4.abs()));
    let r = (b + bp * lambda).norm();
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Location of the first sample where `|phi|` is maximal.
fn phase_anchor(sol: &PiecewiseSolution) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    for (p, trace) in sol.pieces().iter().enumerate() {
        for x in trace.mesh() {
            let v = sol.value(p, x);
            if v.norm() > best.norm() {
                best = v;
            }
        }
    }
    best
}

/// Normalized eigenfunction for `lambda`.
pub fn normalized_eigenfunction(problem: &ValidatedProblem, lambda: f64, tol: f64) -> Result<Eigenfunction> {
    let sol = Arc::new(build_phi(problem, Complex64::new(lambda, 0.0), tol)?);
    let residual = right_bc_residual(problem, sol.at_b(), lambda);
    if residual > EIGEN_RESIDUAL_LIMIT {
        return Err(Error::NotAnEigenvalue { lambda, residual });
    }
    let anchor = phase_anchor(&sol);
    let mut ef = Eigenfunction {
        lambda,
        solution: sol.clone(),
        scale: if anchor.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { anchor.conj() / anchor.norm() },
        f1: Complex64::new(0.0, 0.0),
        f2: Complex64::new(0.0, 0.0),
        boundary_residual: residual,
    };
    // Two passes so the final norm is measured on the rescaled function.
    for _ in 0..2 {
        ef.f1 = boundary_functional(problem, sol.at_a(), BoundaryFunctional::BaPrime) * ef.scale;
        ef.f2 = -boundary_functional(problem, sol.at_b(), BoundaryFunctional::BbPrime) * ef.scale;
        let aug = ef.augmented();
        let n2 = inner_h(problem, &aug, &aug, NORMALIZATION_QUAD_TOL)?.total.re;
        ef.scale /= n2.sqrt();
    }
    ef.f1 = boundary_functional(problem, sol.at_a(), BoundaryFunctional::BaPrime) * ef.scale;
    ef.f2 = -boundary_functional(problem, sol.at_b(), BoundaryFunctional::BbPrime) * ef.scale;
    Ok(ef)
}

/// Unit-norm element `(phi, B'_a[phi], -B'_b[phi])` of `H` for the eigenvalue
/// `lambda`, with positive value at its first point of maximal modulus.
pub fn eigenfunction(problem: &ValidatedProblem, lambda: f64, tol: f64) -> Result<AugmentedFunction> {
    Ok(normalized_eigenfunction(problem, lambda, tol)?.augmented())
}
