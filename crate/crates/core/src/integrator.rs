//! Adaptive integration of `-rho^2 u'' + q(x) u = lambda u` on one piece.
//!
//! Steps are taken with the Dormand–Prince 5(4) pair (local extrapolation,
//! FSAL). Between mesh points the solution is represented by a quintic
//! Hermite interpolant that uses the value, first and second derivative of
//! both components at both ends; the derivatives come from the equation
//! itself, so the interpolant is exact at nodes and `C^2` across them.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{Polynomial, ValidatedProblem};

/// Value and first derivative of a solution at one point.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ValuePair {
    pub u: Complex64,
    pub du: Complex64,
}

impl ValuePair {
    pub fn new(u: Complex64, du: Complex64) -> Self {
        Self { u, du }
    }

    pub fn real(u: f64, du: f64) -> Self {
        Self::new(Complex64::new(u, 0.0), Complex64::new(du, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.du.is_finite()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.u.conj(), self.du.conj())
    }

    /// `max(|u|, |du|)`.
    pub fn magnitude(&self) -> f64 {
        self.u.norm().max(self.du.norm())
    }
}

impl Add for ValuePair {
    type Output = ValuePair;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.u + rhs.u, self.du + rhs.du)
    }
}

impl Sub for ValuePair {
    type Output = ValuePair;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.u - rhs.u, self.du - rhs.du)
    }
}

impl Mul<Complex64> for ValuePair {
    type Output = ValuePair;
    fn mul(self, rhs: Complex64) -> Self {
        Self::new(self.u * rhs, self.du * rhs)
    }
}

impl Mul<f64> for ValuePair {
    type Output = ValuePair;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.u * rhs, self.du * rhs)
    }
}

/// Wronskian `f g' - f' g` of two value pairs.
pub fn wronskian(f: ValuePair, g: ValuePair) -> Complex64 {
    f.u * g.du - f.du * g.u
}

/// Integration direction of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Endpoint of the piece at which initial data is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    x: f64,
    u: Complex64,
    v: Complex64,
    // u'' = c u and v'' = c' u + c v, with c = (q - lambda) / rho^2.
    u2: Complex64,
    v2: Complex64,
}

/// Dense-output solution of one IVP on one piece.
#[derive(Clone, Debug)]
pub struct SolutionTrace {
    piece: usize,
    x_lo: f64,
    x_hi: f64,
    direction: Direction,
    lambda: Complex64,
    tol: f64,
    rho_sq: f64,
    q: Polynomial,
    nodes: Vec<Node>,
}

struct Coefficient<'a> {
    q: &'a Polynomial,
    lambda: Complex64,
    inv_rho_sq: f64,
}

impl Coefficient<'_> {
    #[inline]
    fn c(&self, x: f64) -> Complex64 {
        (Complex64::new(self.q.eval(x), 0.0) - self.lambda) * self.inv_rho_sq
    }

    #[inline]
    fn dc(&self, x: f64) -> f64 {
        self.q.eval_derivative(x) * self.inv_rho_sq
    }

    fn node(&self, x: f64, u: Complex64, v: Complex64) -> Node {
        let c = self.c(x);
        Node {
            x,
            u,
            v,
            u2: c * u,
            v2: u * self.dc(x) + c * v,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [Complex64; 2];

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        out[0] += k[0] * (h * w);
        out[1] += k[1] * (h * w);
    }
    out
}

const MAX_STEPS: usize = 2_000_000;

/// Integrates the equation on `piece` from the endpoint `start` with initial data `init`.
///
/// `tol` bounds the mixed absolute/relative local error of every accepted step.
pub fn integrate_ivp(
    problem: &ValidatedProblem,
    piece: usize,
    lambda: Complex64,
    start: Start,
    init: ValuePair,
    tol: f64,
) -> Result<SolutionTrace> {
    if piece >= problem.n_pieces() {
        return Err(Error::InvalidProblem(format!(
            "piece {} does not exist (problem has {})",
            piece + 1,
            problem.n_pieces()
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidProblem(format!("tolerance must be positive, got {tol}")));
    }
    let (x_lo, x_hi) = problem.piece_bounds(piece);
    if !init.is_finite() {
        let x = if start == Start::Left { x_lo } else { x_hi };
        return Err(Error::NonFiniteState { piece, x });
    }
    let rho_sq = problem.rho_sq(piece);
    let q = problem.potential(piece);
    let coeff = Coefficient {
        q,
        lambda,
        inv_rho_sq: 1.0 / rho_sq,
    };
    let rhs = |x: f64, y: &State| -> State { [y[1], coeff.c(x) * y[0]] };

    let len = x_hi - x_lo;
    let (x0, x_end, sign, direction) = match start {
        Start::Left => (x_lo, x_hi, 1.0, Direction::Forward),
        Start::Right => (x_hi, x_lo, -1.0, Direction::Backward),
    };
    let h_max = len / 8.0;
    let h_min = len * 1e-13;

    let mut x = x0;
    let mut y: State = [init.u, init.du];
    let mut k1 = rhs(x, &y);
    let mut nodes = vec![coeff.node(x, y[0], y[1])];

    let c_scale = coeff.c(x_lo).norm().max(coeff.c(x_hi).norm());
    let mut h = (0.1 * tol.powf(0.2) / (1.0 + c_scale).sqrt()).min(h_max).max(h_min);
    let mut rejected = false;

    for _ in 0..MAX_STEPS {
        let remaining = (x_end - x) * sign;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let hs = step * sign;

        let k2 = rhs(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = rhs(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            x + C4 * hs,
            &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            x + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            x + hs,
            &axpy(
                &y,
                hs,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            hs,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let x_new = if last { x_end } else { x + hs };
        let k7 = rhs(x_new, &y_new);

        let mut err_sq = 0.0;
        for c in 0..2 {
            let e = (k1[c] * E1 + k3[c] * E3 + k4[c] * E4 + k5[c] * E5 + k6[c] * E6 + k7[c] * E7)
                * hs;
            let sc = tol * (1.0 + y[c].norm().max(y_new[c].norm()));
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / 2.0).sqrt();

        if !err.is_finite() || !(y_new[0].is_finite() && y_new[1].is_finite()) {
            if step <= h_min {
                return Err(Error::NonFiniteState { piece, x });
            }
            h = step * 0.2;
            rejected = true;
            continue;
        }

        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            nodes.push(coeff.node(x, y[0], y[1]));
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let factor = if rejected { factor.min(1.0) } else { factor };
            rejected = false;
            if !last {
                h = (step * factor).min(h_max);
            }
        } else {
            h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            rejected = true;
            if h < h_min {
                return Err(Error::StepSizeUnderflow { piece, x });
            }
        }
    }
    if (x_end - x) * sign > 0.0 {
        return Err(Error::StepSizeUnderflow { piece, x });
    }

    if direction == Direction::Backward {
        nodes.reverse();
    }
    // Pin the outermost nodes to the exact piece bounds.
    nodes.first_mut().expect("at least one node").x = x_lo;
    nodes.last_mut().expect("at least one node").x = x_hi;

    Ok(SolutionTrace {
        piece,
        x_lo,
        x_hi,
        direction,
        lambda,
        tol,
        rho_sq,
        q: q.clone(),
        nodes,
    })
}

// Quintic Hermite basis on [0, 1] and its first and second derivatives.
#[inline]
fn hermite(t: f64) -> [f64; 6] {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    [
        1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
        t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
        0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
        10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
        0.5 * (t3 - 2.0 * t4 + t5),
    ]
}

#[inline]
fn hermite_dt2(t: f64) -> [f64; 6] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -60.0 * t + 180.0 * t2 - 120.0 * t3,
        -36.0 * t + 96.0 * t2 - 60.0 * t3,
        0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
        60.0 * t - 180.0 * t2 + 120.0 * t3,
        -24.0 * t + 84.0 * t2 - 60.0 * t3,
        0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
    ]
}

#[inline]
fn combine(w: &[f64; 6], h: f64, p0: [Complex64; 3], p1: [Complex64; 3]) -> Complex64 {
    p0[0] * w[0] + p0[1] * (h * w[1]) + p0[2] * (h * h * w[2]) + p1[0] * w[3]
        + p1[1] * (h * w[4])
        + p1[2] * (h * h * w[5])
}

impl SolutionTrace {
    /// 0-based piece index.
    pub fn piece(&self) -> usize {
        self.piece
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn rho_sq(&self) -> f64 {
        self.rho_sq
    }

    pub fn potential(&self) -> &Polynomial {
        &self.q
    }

    /// Mesh points in increasing order.
    pub fn mesh(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.x).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Value at the left end of the piece.
    pub fn left_value(&self) -> ValuePair {
        let n = &self.nodes[0];
        ValuePair::new(n.u, n.v)
    }

    /// Value at the right end of the piece.
    pub fn right_value(&self) -> ValuePair {
        let n = self.nodes.last().expect("non-empty trace");
        ValuePair::new(n.u, n.v)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }

    fn locate(&self, x: f64) -> Option<usize> {
        assert!(
            self.contains(x),
            "x = {x} outside trace interval [{}, {}]",
            self.x_lo,
            self.x_hi
        );
        let k = self.nodes.partition_point(|n| n.x <= x);
        // k >= 1 since nodes[0].x == x_lo <= x.
        if self.nodes[k - 1].x == x {
            None
        } else {
            Some(k - 1)
        }
    }

    /// Solution value and derivative at `x`.
    ///
    /// # Panics
    /// If `x` lies outside the trace interval.
    pub fn eval(&self, x: f64) -> ValuePair {
        let k = match self.locate(x) {
            None => {
                let k = self.nodes.partition_point(|n| n.x <= x) - 1;
                let n = &self.nodes[k];
                return ValuePair::new(n.u, n.v);
            }
            Some(k) => k,
        };
        let (n0, n1) = (&self.nodes[k], &self.nodes[k + 1]);
        let h = n1.x - n0.x;
        let w = hermite((x - n0.x) / h);
        ValuePair::new(
            combine(&w, h, [n0.u, n0.v, n0.u2], [n1.u, n1.v, n1.u2]),
            combine(&w, h, [n0.v, n0.u2, n0.v2], [n1.v, n1.u2, n1.v2]),
        )
    }

    /// Value only.
    pub fn value(&self, x: f64) -> Complex64 {
        self.eval(x).u
    }

    /// Second derivative of the value interpolant (not taken from the equation).
    pub fn interpolant_second_derivative(&self, x: f64) -> Complex64 {
        let k = match self.locate(x) {
            None => {
                let k = self.nodes.partition_point(|n| n.x <= x) - 1;
                return self.nodes[k].u2;
            }
            Some(k) => k,
        };
        let (n0, n1) = (&self.nodes[k], &self.nodes[k + 1]);
        let h = n1.x - n0.x;
        let w = hermite_dt2((x - n0.x) / h);
        combine(&w, h, [n0.u, n0.v, n0.u2], [n1.u, n1.v, n1.u2]) / (h * h)
    }

    /// `-rho^2 u'' + (q - lambda) u` with `u''` taken from the interpolant.
    pub fn ode_residual(&self, x: f64) -> Complex64 {
        let u = self.value(x);
        -self.interpolant_second_derivative(x) * self.rho_sq
            + u * (Complex64::new(self.q.eval(x), 0.0) - self.lambda)
    }
}

/// Wronskian `u1 u2' - u1' u2` of two traces of the same piece and `lambda` at `x`.
pub fn wronskian_at(t1: &SolutionTrace, t2: &SolutionTrace, x: f64) -> Result<Complex64> {
    if t1.piece != t2.piece {
        return Err(Error::DomainMismatch(format!(
            "traces on pieces {} and {}",
            t1.piece + 1,
            t2.piece + 1
        )));
    }
    if t1.lambda != t2.lambda {
        return Err(Error::DomainMismatch(format!(
            "traces at lambda {} and {}",
            t1.lambda, t2.lambda
        )));
    }
    if !t1.contains(x) || !t2.contains(x) {
        return Err(Error::DomainMismatch(format!(
            "x = {x} outside [{}, {}]",
            t1.x_lo, t1.x_hi
        )));
    }
    Ok(wronskian(t1.eval(x), t2.eval(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn samples(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |k| lo + (hi - lo) * k as f64 / n as f64)
    }

    #[test]
    fn constant_solution() {
        let p = fixtures::validated(fixtures::p0());
        let t = integrate_ivp(&p, 0, c(0.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).unwrap();
        for x in samples(0.0, 1.0, 37) {
            let v = t.eval(x);
            assert!((v.u - c(1.0)).norm() < 1e-14);
            assert!(v.du.norm() < 1e-14);
        }
    }

    #[test]
    fn linear_solution() {
        let p = fixtures::validated(fixtures::p0());
        let t = integrate_ivp(&p, 0, c(0.0), Start::Left, ValuePair::real(0.0, 1.0), 1e-10).unwrap();
        for x in samples(0.0, 1.0, 37) {
            let v = t.eval(x);
            assert!((v.u - c(x)).norm() < 1e-13);
            assert!((v.du - c(1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn sine_solution() {
        let p = fixtures::validated(fixtures::p0());
        let tol = 1e-10;
        let t = integrate_ivp(&p, 0, c(PI * PI), Start::Left, ValuePair::real(0.0, PI), tol).unwrap();
        let mut worst: f64 = 0.0;
        for x in samples(0.0, 1.0, 200) {
            let v = t.eval(x);
            worst = worst
                .max((v.u - c((PI * x).sin())).norm())
                .max((v.du - c(PI * (PI * x).cos())).norm());
        }
        assert!(worst < 10.0 * tol, "max error {worst:e}");
    }

    #[test]
    fn backward_cosine_on_p2_right_piece() {
        let p = fixtures::validated(fixtures::p2());
        let tol = 1e-10;
        let t = integrate_ivp(&p, 1, c(4.0), Start::Right, ValuePair::real(1.0, 0.0), tol).unwrap();
        assert_eq!(t.direction(), Direction::Backward);
        assert_eq!(t.right_value(), ValuePair::real(1.0, 0.0));
        for x in samples(0.0, 1.0, 100) {
            let v = t.eval(x);
            assert!((v.u - c((x - 1.0).cos())).norm() < 10.0 * tol);
            assert!((v.du + c((x - 1.0).sin())).norm() < 10.0 * tol);
        }
    }

    #[test]
    fn nodes_reproduce_stored_values() {
        let p = fixtures::validated(fixtures::p0());
        let t = integrate_ivp(&p, 0, c(30.0), Start::Left, ValuePair::real(0.3, -2.0), 1e-9).unwrap();
        for (x, n) in t.mesh().into_iter().zip(&t.nodes) {
            assert_eq!(t.eval(x), ValuePair::new(n.u, n.v));
        }
        assert_eq!(t.left_value(), ValuePair::real(0.3, -2.0));
    }

    #[test]
    fn ode_residual_at_midpoints() {
        let mut spec = fixtures::p2();
        spec.q[0] = Polynomial::new(vec![1.0, 2.0, -3.0]);
        let p = fixtures::validated(spec);
        let tol = 1e-10;
        let t = integrate_ivp(&p, 0, c(50.0), Start::Left, ValuePair::real(1.0, 1.0), tol).unwrap();
        let mesh = t.mesh();
        for w in mesh.windows(2) {
            let x = 0.5 * (w[0] + w[1]);
            let scale = 1.0 + t.value(x).norm() * 60.0;
            assert!(t.ode_residual(x).norm() < 1e3 * tol * scale);
        }
    }

    #[test]
    fn wronskian_identities() {
        let p = fixtures::validated(fixtures::p0());
        let t1 = integrate_ivp(&p, 0, c(0.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).unwrap();
        let t2 = integrate_ivp(&p, 0, c(0.0), Start::Left, ValuePair::real(0.0, 1.0), 1e-10).unwrap();
        for x in samples(0.0, 1.0, 10) {
            assert!((wronskian_at(&t1, &t2, x).unwrap() - c(1.0)).norm() < 1e-13);
            assert_eq!(wronskian_at(&t1, &t1, x).unwrap(), c(0.0));
        }
    }

    #[test]
    fn wronskian_is_constant() {
        let p = fixtures::validated(fixtures::p0());
        let lam = c(PI * PI);
        let t1 = integrate_ivp(&p, 0, lam, Start::Left, ValuePair::real(1.0, 0.0), 1e-12).unwrap();
        let t2 = integrate_ivp(&p, 0, lam, Start::Left, ValuePair::real(0.0, 1.0), 1e-12).unwrap();
        let w: Vec<Complex64> = samples(0.0, 1.0, 19)
            .map(|x| wronskian_at(&t1, &t2, x).unwrap())
            .collect();
        let spread = w.iter().map(|v| (v - w[0]).norm()).fold(0.0, f64::max);
        assert!(spread / w[0].norm() < 1e-9);
    }

    #[test]
    fn wronskian_domain_mismatch() {
        let p = fixtures::validated(fixtures::p2());
        let t1 = integrate_ivp(&p, 0, c(1.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).unwrap();
        let t2 = integrate_ivp(&p, 1, c(1.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).unwrap();
        let t3 = integrate_ivp(&p, 0, c(2.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).unwrap();
        assert!(matches!(wronskian_at(&t1, &t2, 0.0), Err(Error::DomainMismatch(_))));
        assert!(matches!(wronskian_at(&t1, &t3, -0.5), Err(Error::DomainMismatch(_))));
        assert!(matches!(wronskian_at(&t1, &t1, 0.5), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn rejects_bad_input() {
        let p = fixtures::validated(fixtures::p0());
        let bad = ValuePair::new(c(f64::NAN), c(0.0));
        assert!(matches!(
            integrate_ivp(&p, 0, c(1.0), Start::Left, bad, 1e-10),
            Err(Error::NonFiniteState { .. })
        ));
        assert!(integrate_ivp(&p, 0, c(1.0), Start::Left, ValuePair::real(1.0, 0.0), 0.0).is_err());
        assert!(integrate_ivp(&p, 3, c(1.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-10).is_err());
    }

    #[test]
    fn step_cap_gives_minimum_resolution() {
        let p = fixtures::validated(fixtures::p0());
        let t = integrate_ivp(&p, 0, c(0.0), Start::Left, ValuePair::real(1.0, 0.0), 1e-6).unwrap();
        assert!(t.n_steps() >= 8);
        for w in t.mesh().windows(2) {
            assert!(w[1] - w[0] <= 1.0 / 8.0 + 1e-15);
        }
    }
}
