//! Piecewise functions on the partition and elements of `H = H1 (+) C^2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::problem::{Polynomial, ValidatedProblem};

/// A function defined piece by piece on the partition `a < xi_1 < .. < b`.
///
/// Each piece is evaluated on its closure, so one-sided limits at the
/// interfaces are simply the values of the neighbouring pieces there.
pub trait PiecewiseFunction: Send + Sync {
    fn n_pieces(&self) -> usize;

    fn value(&self, piece: usize, x: f64) -> Complex64;

    /// Points inside `piece` where the function may lose smoothness (mesh
    /// nodes of a dense-output trace, for instance). Quadrature panels are
    /// aligned with them.
    fn knots(&self, _piece: usize) -> Vec<f64> {
        Vec::new()
    }
}

impl<T: PiecewiseFunction + ?Sized> PiecewiseFunction for Arc<T> {
    fn n_pieces(&self) -> usize {
        (**self).n_pieces()
    }
    fn value(&self, piece: usize, x: f64) -> Complex64 {
        (**self).value(piece, x)
    }
    fn knots(&self, piece: usize) -> Vec<f64> {
        (**self).knots(piece)
    }
}

/// One polynomial per piece, in the global coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial {
    pieces: Vec<Polynomial>,
}

impl PiecewisePolynomial {
    pub fn new(pieces: Vec<Polynomial>) -> Self {
        Self { pieces }
    }

    /// The same polynomial on every piece.
    pub fn uniform(problem: &ValidatedProblem, poly: Polynomial) -> Self {
        Self::new(vec![poly; problem.n_pieces()])
    }

    pub fn constant(problem: &ValidatedProblem, c: f64) -> Self {
        Self::uniform(problem, Polynomial::constant(c))
    }

    pub fn pieces(&self) -> &[Polynomial] {
        &self.pieces
    }

    /// Largest absolute value over a uniform sample of each piece.
    pub fn sup_norm(&self, problem: &ValidatedProblem) -> f64 {
        (0..self.pieces.len())
            .flat_map(|p| {
                let (lo, hi) = problem.piece_bounds(p);
                (0..=64).map(move |k| (p, lo + (hi - lo) * k as f64 / 64.0))
            })
            .map(|(p, x)| self.pieces[p].eval(x).abs())
            .fold(0.0, f64::max)
    }
}

impl PiecewiseFunction for PiecewisePolynomial {
    fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    fn value(&self, piece: usize, x: f64) -> Complex64 {
        Complex64::new(self.pieces[piece].eval(x), 0.0)
    }
}

/// Adapter for closures `f(piece, x)`.
pub struct FnPiecewise<F> {
    n_pieces: usize,
    f: F,
}

impl<F> FnPiecewise<F>
where
    F: Fn(usize, f64) -> Complex64 + Send + Sync,
{
    pub fn new(n_pieces: usize, f: F) -> Self {
        Self { n_pieces, f }
    }
}

impl<F> PiecewiseFunction for FnPiecewise<F>
where
    F: Fn(usize, f64) -> Complex64 + Send + Sync,
{
    fn n_pieces(&self) -> usize {
        self.n_pieces
    }
    fn value(&self, piece: usize, x: f64) -> Complex64 {
        (self.f)(piece, x)
    }
}

/// `sum_k c_k f_k`.
#[derive(Clone)]
pub struct LinearCombination {
    terms: Vec<(Complex64, Arc<dyn PiecewiseFunction>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(Complex64, Arc<dyn PiecewiseFunction>)>) -> Self {
        assert!(!terms.is_empty(), "linear combination needs at least one term");
        Self { terms }
    }
}

impl PiecewiseFunction for LinearCombination {
    fn n_pieces(&self) -> usize {
        self.terms[0].1.n_pieces()
    }

    fn value(&self, piece: usize, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, f)| c * f.value(piece, x))
            .sum()
    }

    fn knots(&self, piece: usize) -> Vec<f64> {
        let mut all: Vec<f64> = self.terms.iter().flat_map(|(_, f)| f.knots(piece)).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Element `(f, f1, f2)` of `H = H1 (+) C^2`.
#[derive(Clone)]
pub struct AugmentedFunction {
    pub f: Arc<dyn PiecewiseFunction>,
    pub f1: Complex64,
    pub f2: Complex64,
}

impl fmt::Debug for AugmentedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AugmentedFunction")
            .field("n_pieces", &self.f.n_pieces())
            .field("f1", &self.f1)
            .field("f2", &self.f2)
            .finish()
    }
}

impl AugmentedFunction {
    pub fn new(f: Arc<dyn PiecewiseFunction>, f1: Complex64, f2: Complex64) -> Self {
        Self { f, f1, f2 }
    }

    /// `(f, 0, 0)`.
    pub fn plain(f: Arc<dyn PiecewiseFunction>) -> Self {
        Self::new(f, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// `sum_k c_k F_k` over augmented functions.
    pub fn combine(terms: &[(Complex64, &AugmentedFunction)]) -> Self {
        let f = LinearCombination::new(terms.iter().map(|(c, g)| (*c, g.f.clone())).collect());
        let f1 = terms.iter().map(|(c, g)| c * g.f1).sum();
        let f2 = terms.iter().map(|(c, g)| c * g.f2).sum();
        Self::new(Arc::new(f), f1, f2)
    }

    pub fn value(&self, piece: usize, x: f64) -> Complex64 {
        self.f.value(piece, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn combination_evaluates_termwise() {
        let p = fixtures::validated(fixtures::p2());
        let one: Arc<dyn PiecewiseFunction> = Arc::new(PiecewisePolynomial::constant(&p, 1.0));
        let x: Arc<dyn PiecewiseFunction> =
            Arc::new(PiecewisePolynomial::uniform(&p, Polynomial::new(vec![0.0, 1.0])));
        let f = AugmentedFunction::new(one, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let g = AugmentedFunction::new(x, Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0));
        let h = AugmentedFunction::combine(&[
            (Complex64::new(2.0, 0.0), &f),
            (Complex64::new(0.0, 1.0), &g),
        ]);
        assert_eq!(h.value(1, 0.5), Complex64::new(2.0, 0.5));
        assert_eq!(h.f1, Complex64::new(2.0, 0.0));
        assert_eq!(h.f2, Complex64::new(0.0, 2.0));
    }
}
