//! Problem data, validation, transmission minors and inner-product weights.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::ValuePair;

/// Which end of `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Left,
    Right,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Left => f.write_str("left"),
            Endpoint::Right => f.write_str("right"),
        }
    }
}

/// Real polynomial in the global coordinate `x`, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
    }
}

/// The 2x4 coefficient matrix of the two transmission conditions at one interface.
///
/// `row1 = (d+_1, d+_0, d-_1, d-_0)` and `row2 = (g+_1, g+_0, g-_1, g-_0)`: the
/// columns multiply `u'(xi+)`, `u(xi+)`, `u'(xi-)` and `u(xi-)` respectively.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionMatrix {
    pub row1: [f64; 4],
    pub row2: [f64; 4],
}

impl TransmissionMatrix {
    pub fn new(row1: [f64; 4], row2: [f64; 4]) -> Self {
        Self { row1, row2 }
    }

    /// Determinant of columns `j` and `k` (1-based).
    pub fn theta(&self, j: usize, k: usize) -> Result<f64> {
        theta_minor(self, j, k)
    }

    fn minor(&self, j: usize, k: usize) -> f64 {
        self.row1[j - 1] * self.row2[k - 1] - self.row1[k - 1] * self.row2[j - 1]
    }

    /// Values of the two transmission functionals for one-sided data at the interface.
    pub fn functionals(&self, left: ValuePair, right: ValuePair) -> (Complex64, Complex64) {
        let apply = |row: &[f64; 4]| {
            right.du * row[0] + right.u * row[1] + left.du * row[2] + left.u * row[3]
        };
        (apply(&self.row1), apply(&self.row2))
    }

    /// Largest magnitude among the terms of the two functionals; the natural
    /// rounding scale for residual checks.
    pub fn functional_scale(&self, left: ValuePair, right: ValuePair) -> f64 {
        let vals = [right.du.norm(), right.u.norm(), left.du.norm(), left.u.norm()];
        [self.row1, self.row2]
            .iter()
            .flat_map(|row| row.iter().zip(vals).map(|(c, v)| c.abs() * v))
            .fold(0.0, f64::max)
    }
}

/// Determinant of columns `j` and `k` (1-based, `j < k`) of a transmission matrix.
pub fn theta_minor(tm: &TransmissionMatrix, j: usize, k: usize) -> Result<f64> {
    if !(1..=4).contains(&j) || !(1..=4).contains(&k) || j >= k {
        return Err(Error::BadColumnPair { j, k });
    }
    Ok(tm.minor(j, k))
}

/// Raw problem description, as read from a file or built in code.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    /// Interior interface points, strictly increasing.
    pub xi: Vec<f64>,
    /// One positive coefficient per piece; the equation uses `rho^2`.
    pub rho: Vec<f64>,
    /// One potential per piece.
    pub q: Vec<Polynomial>,
    /// Left boundary coefficients `(d1, d2, d3, d4)`.
    pub delta: [f64; 4],
    /// Right boundary coefficients `(g1, g2, g3, g4)`.
    pub gamma: [f64; 4],
    pub trans: Vec<TransmissionMatrix>,
}

/// Validated, immutable problem with its derived constants.
///
/// Pieces are indexed `0..=n` (piece `p` is `(xi_p, xi_{p+1})` with `xi_0 = a`,
/// `xi_{n+1} = b`); interfaces are indexed `0..n` (interface `i` sits at
/// `xi_{i+1}` between pieces `i` and `i + 1`).
#[derive(Clone, Debug)]
pub struct ValidatedProblem {
    spec: ProblemSpec,
    nodes: Vec<f64>,
    theta: Vec<[f64; 6]>,
    kappa1: f64,
    kappa2: f64,
    weights: Vec<f64>,
    prod_theta12: f64,
    prod_theta34: f64,
}

const PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

fn pair_slot(j: usize, k: usize) -> Option<usize> {
    PAIRS.iter().position(|&p| p == (j, k))
}

/// Checks a [`ProblemSpec`] and precomputes minors, `kappa` values and weights.
pub fn validate_problem(spec: ProblemSpec) -> Result<ValidatedProblem> {
    let n = spec.xi.len();
    if spec.rho.len() != n + 1 || spec.q.len() != n + 1 || spec.trans.len() != n {
        return Err(Error::InvalidProblem(format!(
            "{n} interfaces need {} rho values, {} potentials and {n} transmission matrices \
             (got {}, {}, {})",
            n + 1,
            n + 1,
            spec.rho.len(),
            spec.q.len(),
            spec.trans.len()
        )));
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    let all_finite = spec.a.is_finite()
        && spec.b.is_finite()
        && finite(&spec.xi)
        && finite(&spec.rho)
        && finite(&spec.delta)
        && finite(&spec.gamma)
        && spec.q.iter().all(|p| finite(p.coefficients()))
        && spec.trans.iter().all(|t| finite(&t.row1) && finite(&t.row2));
    if !all_finite {
        return Err(Error::InvalidProblem("non-finite coefficient".into()));
    }

    let mut nodes = Vec::with_capacity(n + 2);
    nodes.push(spec.a);
    nodes.extend_from_slice(&spec.xi);
    nodes.push(spec.b);
    if let Some(w) = nodes.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::NonIncreasingPartition(format!(
            "point {} ({}) is not below point {} ({})",
            w,
            nodes[w],
            w + 1,
            nodes[w + 1]
        )));
    }
    if let Some((piece, &value)) = spec.rho.iter().enumerate().find(|(_, &r)| r <= 0.0) {
        return Err(Error::NonPositiveRho { piece, value });
    }

    let theta: Vec<[f64; 6]> = spec
        .trans
        .iter()
        .map(|tm| PAIRS.map(|(j, k)| tm.minor(j, k)))
        .collect();
    for (interface, t) in theta.iter().enumerate() {
        if t[0] <= 0.0 {
            return Err(Error::ThetaDegenerate {
                interface,
                pair: "12",
                value: t[0],
            });
        }
        if t[5] <= 0.0 {
            return Err(Error::ThetaDegenerate {
                interface,
                pair: "34",
                value: t[5],
            });
        }
    }

    let [d1, d2, d3, d4] = spec.delta;
    let [g1, g2, g3, g4] = spec.gamma;
    let kappa1 = d3 * d2 - d4 * d1;
    let kappa2 = g3 * g2 - g4 * g1;
    if kappa1 <= 0.0 {
        return Err(Error::KappaNonPositive {
            end: Endpoint::Left,
            value: kappa1,
        });
    }
    if kappa2 <= 0.0 {
        return Err(Error::KappaNonPositive {
            end: Endpoint::Right,
            value: kappa2,
        });
    }

    // V_s = rho_s^-2 * prod_{i<s} theta_i12 * prod_{i>=s} theta_i34 (1-based s, i).
    let weights: Vec<f64> = (0..=n)
        .map(|p| {
            let left: f64 = theta[..p].iter().map(|t| t[0]).product();
            let right: f64 = theta[p..].iter().map(|t| t[5]).product();
            left * right / (spec.rho[p] * spec.rho[p])
        })
        .collect();

    // V_s rho_s^2 prod_{j<s} theta_j34/theta_j12 must not depend on s.
    let reference = weights[0] * spec.rho[0] * spec.rho[0];
    for p in 1..=n {
        let ratio: f64 = theta[..p].iter().map(|t| t[5] / t[0]).product();
        let value = weights[p] * spec.rho[p] * spec.rho[p] * ratio;
        if ((value - reference) / reference).abs() > 1e-12 {
            return Err(Error::InvalidProblem(format!(
                "inner-product weight identity fails on piece {}",
                p + 1
            )));
        }
    }

    let prod_theta12 = theta.iter().map(|t| t[0]).product();
    let prod_theta34 = theta.iter().map(|t| t[5]).product();

    Ok(ValidatedProblem {
        spec,
        nodes,
        theta,
        kappa1,
        kappa2,
        weights,
        prod_theta12,
        prod_theta34,
    })
}

impl ValidatedProblem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn a(&self) -> f64 {
        self.spec.a
    }

    pub fn b(&self) -> f64 {
        self.spec.b
    }

    /// Number of interfaces `n`.
    pub fn n_interfaces(&self) -> usize {
        self.spec.xi.len()
    }

    /// Number of pieces `n + 1`.
    pub fn n_pieces(&self) -> usize {
        self.spec.xi.len() + 1
    }

    /// Partition `a, xi_1, .., xi_n, b`.
    pub fn partition(&self) -> &[f64] {
        &self.nodes
    }

    pub fn piece_bounds(&self, piece: usize) -> (f64, f64) {
        (self.nodes[piece], self.nodes[piece + 1])
    }

    pub fn rho(&self, piece: usize) -> f64 {
        self.spec.rho[piece]
    }

    pub fn rho_sq(&self, piece: usize) -> f64 {
        self.spec.rho[piece] * self.spec.rho[piece]
    }

    pub fn potential(&self, piece: usize) -> &Polynomial {
        &self.spec.q[piece]
    }

    pub fn delta(&self) -> [f64; 4] {
        self.spec.delta
    }

    pub fn gamma(&self) -> [f64; 4] {
        self.spec.gamma
    }

    pub fn transmission(&self, interface: usize) -> &TransmissionMatrix {
        &self.spec.trans[interface]
    }

    /// Minor `theta_{i j k}` of interface `interface` (0-based), columns `j < k` (1-based).
    pub fn theta(&self, interface: usize, j: usize, k: usize) -> f64 {
        let slot = pair_slot(j, k).expect("column pair must satisfy 1 <= j < k <= 4");
        self.theta[interface][slot]
    }

    /// `theta_{i12}` with the convention that the fictitious interfaces `0` and
    /// `n + 1` carry every minor equal to one. `index` is 1-based here.
    pub fn theta_ext(&self, index: usize, j: usize, k: usize) -> f64 {
        if index == 0 || index == self.n_interfaces() + 1 {
            1.0
        } else {
            self.theta(index - 1, j, k)
        }
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    /// Weight `V` of the `H1` inner product on `piece`.
    pub fn weight(&self, piece: usize) -> f64 {
        self.weights[piece]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of `f1 * conj(g1)` in the `H` inner product.
    pub fn left_boundary_weight(&self) -> f64 {
        self.prod_theta34 / self.kappa1
    }

    /// Weight of `f2 * conj(g2)` in the `H` inner product.
    pub fn right_boundary_weight(&self) -> f64 {
        self.prod_theta12 / self.kappa2
    }

    /// Piece containing `x`. Endpoints belong to the first and last piece;
    /// interior interface points are rejected.
    pub fn piece_of(&self, x: f64) -> Result<usize> {
        let (a, b) = (self.a(), self.b());
        if !(a..=b).contains(&x) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        if self.spec.xi.contains(&x) {
            return Err(Error::InterfacePoint { x });
        }
        Ok(self.spec.xi.partition_point(|&p| p < x))
    }

    /// Piece containing `x`, taking the piece on the left at an interface.
    pub fn piece_of_left(&self, x: f64) -> Result<usize> {
        let (a, b) = (self.a(), self.b());
        if !(a..=b).contains(&x) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        Ok(self.spec.xi.partition_point(|&p| p < x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn polynomial_horner() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.eval_derivative(2.0), -2.0 + 12.0);
        assert_eq!(Polynomial::zero().eval(5.0), 0.0);
        assert_eq!(Polynomial::constant(3.0).eval_derivative(1.0), 0.0);
    }

    #[test]
    fn p0_constants() {
        let p = validate_problem(fixtures::p0()).unwrap();
        assert_eq!(p.kappa1(), 1.0);
        assert_eq!(p.kappa2(), 1.0);
        assert_eq!(p.weights(), &[1.0]);
        assert_eq!(p.n_pieces(), 1);
    }

    #[test]
    fn p1_minors() {
        let tm = fixtures::p1().trans[0];
        assert_eq!(theta_minor(&tm, 1, 2).unwrap(), 1.0);
        assert_eq!(theta_minor(&tm, 3, 4).unwrap(), 1.0);
        assert_eq!(theta_minor(&tm, 1, 3).unwrap(), 0.0);
        assert_eq!(theta_minor(&tm, 2, 4).unwrap(), 0.0);
        assert_eq!(theta_minor(&tm, 2, 3).unwrap(), 1.0);
        assert_eq!(theta_minor(&tm, 1, 4).unwrap(), -1.0);
    }

    #[test]
    fn p2_constants() {
        let p = validate_problem(fixtures::p2()).unwrap();
        assert_eq!(p.theta(0, 1, 2), 1.0);
        assert_eq!(p.theta(0, 3, 4), 1.0);
        assert_eq!(p.weights(), &[1.0, 0.25]);
        assert_eq!(p.left_boundary_weight(), 1.0);
        assert_eq!(p.right_boundary_weight(), 1.0);
        assert_eq!(theta_minor(&p.spec().trans[0], 3, 4).unwrap(), 1.0);
    }

    #[test]
    fn swapped_rows_are_degenerate() {
        let mut spec = fixtures::p2();
        let tm = spec.trans[0];
        spec.trans[0] = TransmissionMatrix::new(tm.row2, tm.row1);
        assert_eq!(spec.trans[0].theta(1, 2).unwrap(), -1.0);
        match validate_problem(spec) {
            Err(Error::ThetaDegenerate { interface: 0, .. }) => {}
            other => panic!("expected ThetaDegenerate, got {other:?}"),
        }
    }

    #[test]
    fn bad_column_pairs() {
        let tm = fixtures::p1().trans[0];
        for (j, k) in [(2, 2), (3, 1), (0, 2), (1, 5)] {
            assert!(matches!(
                theta_minor(&tm, j, k),
                Err(Error::BadColumnPair { .. })
            ));
        }
    }

    #[test]
    fn rejects_bad_partition_and_rho() {
        let mut spec = fixtures::p2();
        spec.xi = vec![1.5];
        assert!(matches!(
            validate_problem(spec),
            Err(Error::NonIncreasingPartition(_))
        ));
        let mut spec = fixtures::p2();
        spec.rho[1] = 0.0;
        assert!(matches!(
            validate_problem(spec),
            Err(Error::NonPositiveRho { piece: 1, .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_kappa() {
        let mut spec = fixtures::p0();
        spec.delta = [1.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            validate_problem(spec),
            Err(Error::KappaNonPositive {
                end: Endpoint::Left,
                ..
            })
        ));
        let mut spec = fixtures::p0();
        spec.gamma = [0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            validate_problem(spec),
            Err(Error::KappaNonPositive {
                end: Endpoint::Right,
                ..
            })
        ));
    }

    #[test]
    fn piece_lookup() {
        let p = validate_problem(fixtures::p2()).unwrap();
        assert_eq!(p.piece_of(-1.0).unwrap(), 0);
        assert_eq!(p.piece_of(-0.3).unwrap(), 0);
        assert_eq!(p.piece_of(0.3).unwrap(), 1);
        assert_eq!(p.piece_of(1.0).unwrap(), 1);
        assert!(matches!(p.piece_of(0.0), Err(Error::InterfacePoint { .. })));
        assert!(matches!(p.piece_of(1.5), Err(Error::OutOfDomain { .. })));
        assert_eq!(p.piece_of_left(0.0).unwrap(), 0);
    }

    #[test]
    fn transmission_functionals_vanish_for_continuity() {
        let tm = fixtures::p1().trans[0];
        let v = ValuePair::new(Complex64::new(3.7, 0.0), Complex64::new(-1.2, 0.0));
        let (l1, l2) = tm.functionals(v, v);
        assert_eq!(l1, Complex64::new(0.0, 0.0));
        assert_eq!(l2, Complex64::new(0.0, 0.0));
    }
}
