//! Fundamental solutions `phi`, `chi` and the characteristic function.
//!
//! `phi` starts at `a` from data that satisfies the left boundary condition
//! identically in `lambda` and is carried across each interface by the jump
//! map that solves the two transmission conditions for the right-hand limits.
//! `chi` is the mirror image, started at `b` and carried leftwards by the
//! inverse jump map. The characteristic function is the Wronskian of `phi`
//! and `chi` on the first piece; on piece `i + 1` the Wronskian equals the
//! one on piece `i` times `theta_i34 / theta_i12`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::integrator::{integrate_ivp, wronskian, wronskian_at, SolutionTrace, Start, ValuePair};
use crate::problem::ValidatedProblem;

/// Relative recursion violation above which the integration is considered broken.
pub const CONSISTENCY_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionKind {
    Phi,
    Chi,
}

/// `phi(., lambda)` or `chi(., lambda)` over the whole partition.
#[derive(Clone, Debug)]
pub struct PiecewiseSolution {
    kind: SolutionKind,
    lambda: Complex64,
    pieces: Vec<SolutionTrace>,
    /// Per interface: the stored values at `xi-` and `xi+`.
    one_sided: Vec<(ValuePair, ValuePair)>,
}

/// Right-hand limits at interface `interface` from the left-hand ones.
///
/// Solves the two transmission conditions; with the column layout
/// `(u'(xi+), u(xi+), u'(xi-), u(xi-))` this gives
/// `u+ = -(theta_13 u-' + theta_14 u-) / theta_12` and
/// `u+' = (theta_23 u-' + theta_24 u-) / theta_12`.
pub fn transmit_forward(problem: &ValidatedProblem, interface: usize, left: ValuePair) -> ValuePair {
    let t = |j, k| problem.theta(interface, j, k);
    let t12 = t(1, 2);
    ValuePair::new(
        -(left.du * t(1, 3) + left.u * t(1, 4)) / t12,
        (left.du * t(2, 3) + left.u * t(2, 4)) / t12,
    )
}

/// Left-hand limits at interface `interface` from the right-hand ones; the
/// inverse of [`transmit_forward`].
pub fn transmit_backward(
    problem: &ValidatedProblem,
    interface: usize,
    right: ValuePair,
) -> ValuePair {
    let t = |j, k| problem.theta(interface, j, k);
    let t34 = t(3, 4);
    ValuePair::new(
        (right.du * t(1, 3) + right.u * t(2, 3)) / t34,
        -(right.du * t(1, 4) + right.u * t(2, 4)) / t34,
    )
}

/// Initial data of `phi` at `a`: satisfies the left boundary condition for every `lambda`.
pub fn phi_initial(problem: &ValidatedProblem, lambda: Complex64) -> ValuePair {
    let [d1, d2, d3, d4] = problem.delta();
    ValuePair::new(-lambda * d4 + d2, -lambda * d3 + d1)
}

/// Initial data of `chi` at `b`: satisfies the right boundary condition for every `lambda`.
pub fn chi_initial(problem: &ValidatedProblem, lambda: Complex64) -> ValuePair {
    let [g1, g2, g3, g4] = problem.gamma();
    ValuePair::new(lambda * g4 + g2, lambda * g3 + g1)
}

fn annotate(err: Error, piece: usize) -> Error {
    match err {
        Error::StepSizeUnderflow { x, .. } => Error::StepSizeUnderflow { piece, x },
        Error::NonFiniteState { x, .. } => Error::NonFiniteState { piece, x },
        other => other,
    }
}

/// Builds `phi(., lambda)` left to right.
pub fn build_phi(problem: &ValidatedProblem, lambda: Complex64, tol: f64) -> Result<PiecewiseSolution> {
    let n = problem.n_interfaces();
    let mut pieces = Vec::with_capacity(n + 1);
    let mut one_sided = Vec::with_capacity(n);
    let mut init = phi_initial(problem, lambda);
    for piece in 0..=n {
        let trace = integrate_ivp(problem, piece, lambda, Start::Left, init, tol)
            .map_err(|e| annotate(e, piece))?;
        if piece < n {
            let left = trace.right_value();
            init = transmit_forward(problem, piece, left);
            one_sided.push((left, init));
        }
        pieces.push(trace);
    }
    Ok(PiecewiseSolution {
        kind: SolutionKind::Phi,
        lambda,
        pieces,
        one_sided,
    })
}

/// Builds `chi(., lambda)` right to left.
pub fn build_chi(problem: &ValidatedProblem, lambda: Complex64, tol: f64) -> Result<PiecewiseSolution> {
    let n = problem.n_interfaces();
    let mut pieces = Vec::with_capacity(n + 1);
    let mut one_sided = Vec::with_capacity(n);
    let mut init = chi_initial(problem, lambda);
    for piece in (0..=n).rev() {
        let trace = integrate_ivp(problem, piece, lambda, Start::Right, init, tol)
            .map_err(|e| annotate(e, piece))?;
        if piece > 0 {
            let right = trace.left_value();
            init = transmit_backward(problem, piece - 1, right);
            one_sided.push((init, right));
        }
        pieces.push(trace);
    }
    pieces.reverse();
    one_sided.reverse();
    Ok(PiecewiseSolution {
        kind: SolutionKind::Chi,
        lambda,
        pieces,
        one_sided,
    })
}

impl PiecewiseSolution {
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn pieces(&self) -> &[SolutionTrace] {
        &self.pieces
    }

    pub fn piece(&self, piece: usize) -> &SolutionTrace {
        &self.pieces[piece]
    }

    /// Stored `(xi-, xi+)` values at interface `interface`.
    pub fn one_sided(&self, interface: usize) -> (ValuePair, ValuePair) {
        self.one_sided[interface]
    }

    /// Value and derivative on `piece` at `x`.
    pub fn eval(&self, piece: usize, x: f64) -> ValuePair {
        self.pieces[piece].eval(x)
    }

    /// Value pair at `a`.
    pub fn at_a(&self) -> ValuePair {
        self.pieces[0].left_value()
    }

    /// Value pair at `b`.
    pub fn at_b(&self) -> ValuePair {
        self.pieces.last().expect("non-empty").right_value()
    }

    /// Largest relative transmission-functional residual over all interfaces.
    pub fn transmission_residual(&self, problem: &ValidatedProblem) -> f64 {
        self.one_sided
            .iter()
            .enumerate()
            .map(|(i, &(l, r))| {
                let tm = problem.transmission(i);
                let (f1, f2) = tm.functionals(l, r);
                let scale = tm.functional_scale(l, r);
                if scale == 0.0 {
                    0.0
                } else {
                    f1.norm().max(f2.norm()) / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

impl PiecewiseFunction for PiecewiseSolution {
    fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    fn value(&self, piece: usize, x: f64) -> Complex64 {
        self.pieces[piece].value(x)
    }

    fn knots(&self, piece: usize) -> Vec<f64> {
        self.pieces[piece].mesh()
    }
}

/// Characteristic function with the per-piece Wronskians it was checked against.
#[derive(Clone, Debug)]
pub struct CharacteristicValue {
    /// `omega(lambda) = omega_1(lambda)`.
    pub omega: Complex64,
    /// Wronskian of `phi` and `chi` on every piece, evaluated at the midpoint.
    pub piece_omegas: Vec<Complex64>,
    /// Magnitude of the terms `|phi chi'| + |phi' chi|` at each midpoint.
    pub term_scales: Vec<f64>,
    /// Largest relative violation of `omega_{i+1} theta_i12 = omega_i theta_i34`,
    /// measured against the Wronskian term scale.
    pub recursion_violation: f64,
}

impl CharacteristicValue {
    /// Violation measured as `|w_{i+1} t12 - w_i t34| / max(|w_i|, |w_{i+1}|)`.
    pub fn relative_recursion_violation(&self, problem: &ValidatedProblem) -> f64 {
        (0..problem.n_interfaces())
            .map(|i| {
                let (w0, w1) = (self.piece_omegas[i], self.piece_omegas[i + 1]);
                let diff = (w1 * problem.theta(i, 1, 2) - w0 * problem.theta(i, 3, 4)).norm();
                let scale = w0.norm().max(w1.norm());
                if scale == 0.0 {
                    diff
                } else {
                    diff / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

fn midpoint(problem: &ValidatedProblem, piece: usize) -> f64 {
    let (lo, hi) = problem.piece_bounds(piece);
    0.5 * (lo + hi)
}

/// Wronskian of `phi` and `chi` on `piece` (0-based) at the piece midpoint.
pub fn omega_i(problem: &ValidatedProblem, lambda: Complex64, piece: usize, tol: f64) -> Result<Complex64> {
    if piece >= problem.n_pieces() {
        return Err(Error::InvalidProblem(format!("piece {} does not exist", piece + 1)));
    }
    let phi = build_phi(problem, lambda, tol)?;
    let chi = build_chi(problem, lambda, tol)?;
    wronskian_at(phi.piece(piece), chi.piece(piece), midpoint(problem, piece))
}

/// Evaluates from already built fundamental solutions.
pub fn characteristic_from(
    problem: &ValidatedProblem,
    phi: &PiecewiseSolution,
    chi: &PiecewiseSolution,
) -> Result<CharacteristicValue> {
    let mut piece_omegas = Vec::with_capacity(problem.n_pieces());
    let mut term_scales = Vec::with_capacity(problem.n_pieces());
    for p in 0..problem.n_pieces() {
        let x = midpoint(problem, p);
        let (f, g) = (phi.eval(p, x), chi.eval(p, x));
        piece_omegas.push(wronskian(f, g));
        term_scales.push((f.u * g.du).norm() + (f.du * g.u).norm());
    }
    let mut recursion_violation: f64 = 0.0;
    for i in 0..problem.n_interfaces() {
        let lhs = piece_omegas[i + 1] * problem.theta(i, 1, 2);
        let rhs = piece_omegas[i] * problem.theta(i, 3, 4);
        let scale = (term_scales[i + 1] * problem.theta(i, 1, 2))
            .max(term_scales[i] * problem.theta(i, 3, 4));
        let v = if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale };
        if v > CONSISTENCY_LIMIT {
            return Err(Error::ConsistencyViolation {
                interface: i,
                violation: v,
            });
        }
        recursion_violation = recursion_violation.max(v);
    }
    Ok(CharacteristicValue {
        omega: piece_omegas[0],
        piece_omegas,
        term_scales,
        recursion_violation,
    })
}

/// Characteristic function `omega(lambda)`; the Wronskian recursion across
/// all interfaces is checked on every call.
pub fn characteristic(problem: &ValidatedProblem, lambda: Complex64, tol: f64) -> Result<CharacteristicValue> {
    let phi = build_phi(problem, lambda, tol)?;
    let chi = build_chi(problem, lambda, tol)?;
    characteristic_from(problem, &phi, &chi)
}
