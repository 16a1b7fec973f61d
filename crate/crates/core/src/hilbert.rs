//! Weighted inner products on `H = H1 (+) C^2`, boundary functionals and
//! the eigenfunction expansion.
//!
//! On piece `s` the `H1` part carries the weight `V_s` of
//! [`ValidatedProblem::weight`]; the two boundary components are weighted by
//! [`ValidatedProblem::left_boundary_weight`] and
//! [`ValidatedProblem::right_boundary_weight`]. The second argument is
//! conjugated throughout.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::{AugmentedFunction, PiecewiseFunction};
use crate::fundamental::PiecewiseSolution;
use crate::integrator::{wronskian, ValuePair};
use crate::problem::ValidatedProblem;
use crate::quadrature;
use crate::spectrum::{self, Spectrum};

/// The four endpoint functionals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryFunctional {
    /// `d1 f(a) - d2 f'(a)`
    Ba,
    /// `d3 f(a) - d4 f'(a)`
    BaPrime,
    /// `g1 f(b) - g2 f'(b)`
    Bb,
    /// `g3 f(b) - g4 f'(b)`
    BbPrime,
}

/// Applies `which` to endpoint data `v` (the value pair at `a` for the `Ba`
/// functionals, at `b` for the `Bb` ones).
pub fn boundary_functional(problem: &ValidatedProblem, v: ValuePair, which: BoundaryFunctional) -> Complex64 {
    let [d1, d2, d3, d4] = problem.delta();
    let [g1, g2, g3, g4] = problem.gamma();
    let (c0, c1) = match which {
        BoundaryFunctional::Ba => (d1, d2),
        BoundaryFunctional::BaPrime => (d3, d4),
        BoundaryFunctional::Bb => (g1, g2),
        BoundaryFunctional::BbPrime => (g3, g4),
    };
    v.u * c0 - v.du * c1
}

/// Components of `<F, G>` in `H` (or `H1` alone, with zero boundary parts).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerProductReport {
    pub h1_part: Complex64,
    pub left_boundary_part: Complex64,
    pub right_boundary_part: Complex64,
    pub total: Complex64,
    /// Weighted sum of the last panel-refinement changes.
    pub quadrature_error_estimate: f64,
}

fn piece_knots(f: &dyn PiecewiseFunction, g: &dyn PiecewiseFunction, piece: usize) -> Vec<f64> {
    let mut k = f.knots(piece);
    k.extend(g.knots(piece));
    k
}

/// `sum_s V_s int_{Omega_s} f conj(g)`.
pub fn inner_h1(
    problem: &ValidatedProblem,
    f: &dyn PiecewiseFunction,
    g: &dyn PiecewiseFunction,
    quad_tol: f64,
) -> Result<InnerProductReport> {
    check_pieces(problem, f)?;
    check_pieces(problem, g)?;
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in 0..problem.n_pieces() {
        let (lo, hi) = problem.piece_bounds(p);
        let integrand = |x: f64| f.value(p, x) * g.value(p, x).conj();
        let r = quadrature::integrate(&integrand, lo, hi, &piece_knots(f, g, p), quad_tol, p)?;
        let w = problem.weight(p);
        total += r.value * w;
        err += r.change * w;
    }
    Ok(InnerProductReport {
        h1_part: total,
        left_boundary_part: Complex64::new(0.0, 0.0),
        right_boundary_part: Complex64::new(0.0, 0.0),
        total,
        quadrature_error_estimate: err,
    })
}

fn check_pieces(problem: &ValidatedProblem, f: &dyn PiecewiseFunction) -> Result<()> {
    if f.n_pieces() != problem.n_pieces() {
        return Err(Error::DomainMismatch(format!(
            "function has {} pieces, problem has {}",
            f.n_pieces(),
            problem.n_pieces()
        )));
    }
    Ok(())
}

/// Full inner product in `H`.
pub fn inner_h(
    problem: &ValidatedProblem,
    f: &AugmentedFunction,
    g: &AugmentedFunction,
    quad_tol: f64,
) -> Result<InnerProductReport> {
    let h1 = inner_h1(problem, f.f.as_ref(), g.f.as_ref(), quad_tol)?;
    let left = f.f1 * g.f1.conj() * problem.left_boundary_weight();
    let right = f.f2 * g.f2.conj() * problem.right_boundary_weight();
    Ok(InnerProductReport {
        h1_part: h1.h1_part,
        left_boundary_part: left,
        right_boundary_part: right,
        total: h1.h1_part + left + right,
        quadrature_error_estimate: h1.quadrature_error_estimate,
    })
}

/// `H` norm.
pub fn norm_h(problem: &ValidatedProblem, f: &AugmentedFunction, quad_tol: f64) -> Result<f64> {
    Ok(inner_h(problem, f, f, quad_tol)?.total.re.max(0.0).sqrt())
}

fn conj_wronskian(f: ValuePair, g: ValuePair) -> (Complex64, f64) {
    let g = g.conj();
    (wronskian(f, g), (f.u * g.du).norm() + (f.du * g.u).norm())
}

/// Residual of `theta_34 W(f, conj g; xi-) = theta_12 W(f, conj g; xi+)` at
/// `interface`, relative to the size of the Wronskian terms.
pub fn wronskian_transmission_identity(
    problem: &ValidatedProblem,
    f: &PiecewiseSolution,
    g: &PiecewiseSolution,
    interface: usize,
) -> f64 {
    let (fl, fr) = f.one_sided(interface);
    let (gl, gr) = g.one_sided(interface);
    let t34 = problem.theta(interface, 3, 4);
    let t12 = problem.theta(interface, 1, 2);
    let (wl, sl) = conj_wronskian(fl, gl);
    let (wr, sr) = conj_wronskian(fr, gr);
    let scale = (t34 * sl).max(t12 * sr);
    if scale == 0.0 {
        return 0.0;
    }
    (wl * t34 - wr * t12).norm() / scale
}

/// Residuals of the two endpoint identities
/// `Ba[f] conj(B'a[g]) - B'a[f] conj(Ba[g]) = kappa1 W(f, conj g; a)` and
/// `Bb[f] conj(B'b[g]) - B'b[f] conj(Bb[g]) = kappa2 W(f, conj g; b)`,
/// each relative to the magnitude of its terms.
pub fn boundary_identity_check(
    problem: &ValidatedProblem,
    f_a: ValuePair,
    g_a: ValuePair,
    f_b: ValuePair,
    g_b: ValuePair,
) -> (f64, f64) {
    use BoundaryFunctional::*;
    let side = |f: ValuePair, g: ValuePair, b: BoundaryFunctional, bp: BoundaryFunctional, kappa: f64| {
        let (bf, bpf) = (boundary_functional(problem, f, b), boundary_functional(problem, f, bp));
        let (bg, bpg) = (boundary_functional(problem, g, b), boundary_functional(problem, g, bp));
        let t1 = bf * bpg.conj();
        let t2 = bpf * bg.conj();
        let (w, ws) = conj_wronskian(f, g);
        let scale = t1.norm() + t2.norm() + kappa * ws;
        let diff = (t1 - t2 - w * kappa).norm();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    };
    (
        side(f_a, g_a, Ba, BaPrime, problem.kappa1()),
        side(f_b, g_b, Bb, BbPrime, problem.kappa2()),
    )
}

/// `|<Psi_j, Psi_k>_H|`.
pub fn check_orthogonality(
    problem: &ValidatedProblem,
    psi_j: &AugmentedFunction,
    psi_k: &AugmentedFunction,
    quad_tol: f64,
) -> Result<f64> {
    Ok(inner_h(problem, psi_j, psi_k, quad_tol)?.total.norm())
}

/// Gram matrix `<Psi_j, Psi_k>_H` of a family, computed in parallel.
pub fn gram_matrix(
    problem: &ValidatedProblem,
    family: &[AugmentedFunction],
    quad_tol: f64,
) -> Result<Vec<Vec<Complex64>>> {
    let m = family.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|j| (j..m).map(move |k| (j, k))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(j, k)| inner_h(problem, &family[j], &family[k], quad_tol).map(|r| r.total))
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for (&(j, k), v) in pairs.iter().zip(vals) {
        g[j][k] = v;
        g[k][j] = v.conj();
    }
    Ok(g)
}

/// Normalized eigenfunctions used for expansions, in increasing eigenvalue order.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub functions: Vec<AugmentedFunction>,
}

impl EigenBasis {
    /// Eigenfunctions of every eigenvalue in `spectrum`.
    pub fn from_spectrum(problem: &ValidatedProblem, spectrum: &Spectrum, tol: f64) -> Result<Self> {
        let functions = spectrum
            .eigenvalues
            .par_iter()
            .map(|&l| spectrum::eigenfunction(problem, l, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            eigenvalues: spectrum.eigenvalues.clone(),
            functions,
        })
    }

    /// Eigenfunctions in a search window.
    pub fn in_window(problem: &ValidatedProblem, window: (f64, f64), grid: usize, tol: f64) -> Result<Self> {
        let s = spectrum::eigenvalues(problem, window, grid, tol)?;
        Self::from_spectrum(problem, &s, tol)
    }

    /// The `count` lowest eigenfunctions.
    pub fn lowest(problem: &ValidatedProblem, count: usize, tol: f64) -> Result<Self> {
        let s = spectrum::lowest_eigenvalues(problem, count, tol)?;
        Self::from_spectrum(problem, &s, tol)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Truncated eigenfunction expansion of one element of `H`.
#[derive(Clone, Debug)]
pub struct ExpansionResult {
    /// `c_s = <F, Psi_s>_H`, `s = 1..N`.
    pub coefficients: Vec<Complex64>,
    pub truncation: usize,
    /// `|| F - sum_s c_s Psi_s ||_H`.
    pub l2_residual: f64,
}

/// Expands `f` in the first `n` elements of `basis`.
pub fn expand(
    problem: &ValidatedProblem,
    f: &AugmentedFunction,
    n: usize,
    basis: &EigenBasis,
    quad_tol: f64,
) -> Result<ExpansionResult> {
    if basis.len() < n {
        return Err(Error::InsufficientEigenvalues {
            requested: n,
            found: basis.len(),
        });
    }
    let coefficients = expansion_coefficients(problem, f, &basis.functions[..n], quad_tol)?;
    let l2_residual = expansion_residual(problem, f, &basis.functions[..n], &coefficients, quad_tol)?;
    Ok(ExpansionResult {
        coefficients,
        truncation: n,
        l2_residual,
    })
}

/// `<F, Psi_s>_H` for every `Psi_s` in `family`.
pub fn expansion_coefficients(
    problem: &ValidatedProblem,
    f: &AugmentedFunction,
    family: &[AugmentedFunction],
    quad_tol: f64,
) -> Result<Vec<Complex64>> {
    family
        .par_iter()
        .map(|psi| inner_h(problem, f, psi, quad_tol).map(|r| r.total))
        .collect()
}

/// `|| F - sum_s c_s Psi_s ||_H`, integrating `|F - sum|^2` directly so that
/// small residuals are not lost to cancellation.
pub fn expansion_residual(
    problem: &ValidatedProblem,
    f: &AugmentedFunction,
    family: &[AugmentedFunction],
    coefficients: &[Complex64],
    quad_tol: f64,
) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let mut terms: Vec<(Complex64, &AugmentedFunction)> = vec![(one, f)];
    terms.extend(coefficients.iter().zip(family).map(|(c, psi)| (-c, psi)));
    let r = AugmentedFunction::combine(&terms);
    norm_h(problem, &r, quad_tol)
}

/// Wraps a plain function as `(f, 0, 0)`.
pub fn plain(f: impl PiecewiseFunction + 'static) -> AugmentedFunction {
    AugmentedFunction::plain(Arc::new(f))
}

/// `sum_s c_s Psi_s` as an element of `H`.
pub fn synthesize(family: &[AugmentedFunction], coefficients: &[Complex64]) -> AugmentedFunction {
    let terms: Vec<(Complex64, &AugmentedFunction)> = coefficients.iter().copied().zip(family).collect();
    AugmentedFunction::combine(&terms)
}
