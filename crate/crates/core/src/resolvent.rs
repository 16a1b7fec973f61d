//! Green's kernel and the resolvent `(lambda I - L)^{-1}` by variation of parameters.
//!
//! With `A_s = int_{Omega_s} phi f / (rho_s^2 omega_s)` and
//! `C_s = int_{Omega_s} chi f / (rho_s^2 omega_s)`, the solution on piece `m` is
//!
//! ```text
//! u(x) = [chi_m(x) int_{lo_m}^x phi_m f + phi_m(x) int_x^{hi_m} chi_m f] / (rho_m^2 omega_m)
//!      + phi_m(x) sum_{s>m} C_s + chi_m(x) sum_{s<m} A_s
//! ```
//!
//! which is `int G(x, y) f(y) dy` for the kernel of [`GreensKernel`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::fundamental::{build_chi, build_phi, characteristic_from, PiecewiseSolution};
use crate::hilbert::inner_h1;
use crate::integrator::ValuePair;
use crate::problem::ValidatedProblem;
use crate::quadrature::{self, Cumulative};

/// Quadrature tolerance for the coefficient and running integrals.
pub const RESOLVENT_QUAD_TOL: f64 = 1e-11;

/// Interior residual check points per piece.
const CHECK_POINTS: usize = 100;

/// `|omega(lambda)| < NEAR_EIGENVALUE * max(1, |lambda|^2)` is rejected.
pub const NEAR_EIGENVALUE: f64 = 1e-8;

fn near_eigenvalue_check(lambda: Complex64, omega: Complex64) -> Result<()> {
    let abs_omega = omega.norm();
    if abs_omega < NEAR_EIGENVALUE * lambda.norm_sqr().max(1.0) {
        return Err(Error::NearEigenvalue { lambda, abs_omega });
    }
    Ok(())
}

/// Fundamental solutions and per-piece Wronskians at one `lambda`.
#[derive(Clone, Debug)]
struct Fundamentals {
    lambda: Complex64,
    phi: Arc<PiecewiseSolution>,
    chi: Arc<PiecewiseSolution>,
    /// `rho_s^2 omega_s`.
    denom: Vec<Complex64>,
}

impl Fundamentals {
    fn new(problem: &ValidatedProblem, lambda: Complex64, tol: f64) -> Result<Self> {
        let phi = build_phi(problem, lambda, tol)?;
        let chi = build_chi(problem, lambda, tol)?;
        let cv = characteristic_from(problem, &phi, &chi)?;
        near_eigenvalue_check(lambda, cv.omega)?;
        let denom = cv
            .piece_omegas
            .iter()
            .enumerate()
            .map(|(s, w)| w * problem.rho_sq(s))
            .collect();
        Ok(Self {
            lambda,
            phi: Arc::new(phi),
            chi: Arc::new(chi),
            denom,
        })
    }
}

/// One kernel value with the pieces it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreensEvaluation {
    pub x: f64,
    pub y: f64,
    pub lambda: Complex64,
    pub value: Complex64,
    /// 0-based pieces of `x` and `y`.
    pub pieces_used: (usize, usize),
}

/// `G(x, y; lambda)` for a fixed `lambda`:
/// `phi_s(y) chi_m(x) / (rho_s^2 omega_s)` for `y <= x` and
/// `phi_m(x) chi_s(y) / (rho_s^2 omega_s)` for `x <= y`, where `m` and `s`
/// are the pieces of `x` and `y`.
#[derive(Clone, Debug)]
pub struct GreensKernel {
    problem: ValidatedProblem,
    fund: Fundamentals,
}

impl GreensKernel {
    pub fn new(problem: &ValidatedProblem, lambda: Complex64, tol: f64) -> Result<Self> {
        Ok(Self {
            problem: problem.clone(),
            fund: Fundamentals::new(problem, lambda, tol)?,
        })
    }

    pub fn lambda(&self) -> Complex64 {
        self.fund.lambda
    }

    /// Per-piece Wronskians `omega_s(lambda)`.
    pub fn piece_omegas(&self) -> Vec<Complex64> {
        self.fund
            .denom
            .iter()
            .enumerate()
            .map(|(s, d)| d / self.problem.rho_sq(s))
            .collect()
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<GreensEvaluation> {
        let m = self.problem.piece_of(x)?;
        let s = self.problem.piece_of(y)?;
        Ok(self.eval_unchecked(m, x, s, y))
    }

    /// Evaluates with explicit pieces, which makes one-sided values at
    /// interfaces available. Each point must lie in the closure of its piece.
    pub fn eval_in(&self, piece_x: usize, x: f64, piece_y: usize, y: f64) -> Result<GreensEvaluation> {
        for (p, t) in [(piece_x, x), (piece_y, y)] {
            if p >= self.problem.n_pieces() {
                return Err(Error::InvalidProblem(format!("piece {} does not exist", p + 1)));
            }
            let (lo, hi) = self.problem.piece_bounds(p);
            if !(lo..=hi).contains(&t) {
                return Err(Error::OutOfDomain { x: t, a: lo, b: hi });
            }
        }
        Ok(self.eval_unchecked(piece_x, x, piece_y, y))
    }

    fn eval_unchecked(&self, m: usize, x: f64, s: usize, y: f64) -> GreensEvaluation {
        let f = &self.fund;
        let value = if y <= x {
            f.phi.value(s, y) * f.chi.value(m, x) / f.denom[s]
        } else {
            f.phi.value(m, x) * f.chi.value(s, y) / f.denom[s]
        };
        GreensEvaluation {
            x,
            y,
            lambda: f.lambda,
            value,
            pieces_used: (m, s),
        }
    }
}

/// Single kernel evaluation.
pub fn greens(problem: &ValidatedProblem, lambda: Complex64, x: f64, y: f64, tol: f64) -> Result<Complex64> {
    Ok(GreensKernel::new(problem, lambda, tol)?.eval(x, y)?.value)
}

/// Solution of `(lambda I - L) u = f` with its residual checks.
#[derive(Clone)]
pub struct ResolventSolution {
    fund: Fundamentals,
    f: Arc<dyn PiecewiseFunction>,
    /// Per piece: running integrals of `phi f` and `chi f`.
    cum_phi: Vec<Cumulative>,
    cum_chi: Vec<Cumulative>,
    /// `sum_{s<m} A_s` and `sum_{s>m} C_s` for every piece `m`.
    left_sums: Vec<Complex64>,
    right_sums: Vec<Complex64>,
    pub lambda: Complex64,
    /// `sup |lambda u + rho^2 u'' - q u - f|` over the check points, relative to `sup |f|`.
    pub residual_ode: f64,
    /// Largest relative residual of the two boundary conditions.
    pub residual_bc: f64,
    /// Largest relative residual of the transmission conditions.
    pub residual_trans: f64,
    /// `sup |f|` over the check points.
    pub f_scale: f64,
}

impl std::fmt::Debug for ResolventSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResolventSolution")
            .field("lambda", &self.lambda)
            .field("residual_ode", &self.residual_ode)
            .field("residual_bc", &self.residual_bc)
            .field("residual_trans", &self.residual_trans)
            .finish_non_exhaustive()
    }
}

impl ResolventSolution {
    /// `u` and `u'` on `piece` at `x`.
    pub fn eval(&self, piece: usize, x: f64) -> ValuePair {
        let fd = &self.fund;
        let (phi, chi) = (fd.phi.eval(piece, x), fd.chi.eval(piece, x));
        let f = &self.f;
        let phi_f = |y: f64| fd.phi.value(piece, y) * f.value(piece, y);
        let chi_f = |y: f64| fd.chi.value(piece, y) * f.value(piece, y);
        let ip = self.cum_phi[piece].at(&phi_f, x);
        let cm = &self.cum_chi[piece];
        let ic = cm.total() - cm.at(&chi_f, x);
        let d = fd.denom[piece];
        let cphi = ic / d + self.right_sums[piece];
        let cchi = ip / d + self.left_sums[piece];
        phi * cphi + chi * cchi
    }

    fn bc_residuals(&self, problem: &ValidatedProblem) -> f64 {
        let l = self.lambda;
        let n = problem.n_pieces();
        let ua = self.eval(0, problem.a());
        let ub = self.eval(n - 1, problem.b());
        let [d1, d2, d3, d4] = problem.delta();
        let [g1, g2, g3, g4] = problem.gamma();
        let rel = |terms: [Complex64; 4]| {
            let r: Complex64 = terms.iter().sum();
            let s: f64 = terms.iter().map(|t| t.norm()).sum();
            if s == 0.0 {
                r.norm()
            } else {
                r.norm() / s
            }
        };
        let left = rel([ua.u * d1, -ua.du * d2, -l * ua.u * d3, l * ua.du * d4]);
        let right = rel([ub.u * g1, -ub.du * g2, l * ub.u * g3, -l * ub.du * g4]);
        left.max(right)
    }

    fn trans_residuals(&self, problem: &ValidatedProblem) -> f64 {
        (0..problem.n_interfaces())
            .map(|i| {
                let x = problem.partition()[i + 1];
                let (l, r) = (self.eval(i, x), self.eval(i + 1, x));
                let tm = problem.transmission(i);
                let (f1, f2) = tm.functionals(l, r);
                let scale = tm.functional_scale(l, r);
                let res = f1.norm().max(f2.norm());
                if scale == 0.0 {
                    res
                } else {
                    res / scale
                }
            })
            .fold(0.0, f64::max)
    }

    /// Residual of the equation with `u''` from 5-point differencing of `u'`.
    /// Differencing `u'` rather than `u` keeps the amplification of the
    /// quadrature error in the running integrals at `1/h` instead of `1/h^2`.
    fn ode_residual(&self, problem: &ValidatedProblem) -> (f64, f64) {
        let mut worst: f64 = 0.0;
        let mut f_sup: f64 = 0.0;
        for p in 0..problem.n_pieces() {
            let (lo, hi) = problem.piece_bounds(p);
            let len = hi - lo;
            let h = 1e-3 * len;
            let rho2 = problem.rho_sq(p);
            for j in 0..CHECK_POINTS {
                let x = lo + len * (j as f64 + 0.5) / CHECK_POINTS as f64;
                let du = |t: f64| self.eval(p, x + t * h).du;
                let d2 = (du(-2.0) - du(-1.0) * 8.0 + du(1.0) * 8.0 - du(2.0)) / (12.0 * h);
                let u = self.eval(p, x).u;
                let fx = self.f.value(p, x);
                let r = self.lambda * u + d2 * rho2 - u * problem.potential(p).eval(x) - fx;
                worst = worst.max(r.norm());
                f_sup = f_sup.max(fx.norm());
            }
        }
        (worst, f_sup)
    }
}

impl PiecewiseFunction for ResolventSolution {
    fn n_pieces(&self) -> usize {
        self.cum_phi.len()
    }

    fn value(&self, piece: usize, x: f64) -> Complex64 {
        self.eval(piece, x).u
    }

    fn knots(&self, piece: usize) -> Vec<f64> {
        let mut k = self.fund.phi.knots(piece);
        k.extend(self.fund.chi.knots(piece));
        k
    }
}

/// Solves `(lambda I - L) u = f` and measures the residuals of the equation,
/// the boundary conditions and the transmission conditions.
pub fn solve_resolvent(
    problem: &ValidatedProblem,
    lambda: Complex64,
    f: Arc<dyn PiecewiseFunction>,
    tol: f64,
) -> Result<ResolventSolution> {
    if f.n_pieces() != problem.n_pieces() {
        return Err(Error::DomainMismatch(format!(
            "right-hand side has {} pieces, problem has {}",
            f.n_pieces(),
            problem.n_pieces()
        )));
    }
    let fund = Fundamentals::new(problem, lambda, tol)?;
    let n = problem.n_pieces();
    let mut cum_phi = Vec::with_capacity(n);
    let mut cum_chi = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for p in 0..n {
        let (lo, hi) = problem.piece_bounds(p);
        let mut knots = fund.phi.knots(p);
        knots.extend(fund.chi.knots(p));
        knots.extend(f.knots(p));
        let phi_f = |y: f64| fund.phi.value(p, y) * f.value(p, y);
        let chi_f = |y: f64| fund.chi.value(p, y) * f.value(p, y);
        let ip = quadrature::integrate(&phi_f, lo, hi, &knots, RESOLVENT_QUAD_TOL, p)?;
        let ic = quadrature::integrate(&chi_f, lo, hi, &knots, RESOLVENT_QUAD_TOL, p)?;
        let cp = Cumulative::new(&phi_f, ip.edges);
        let cc = Cumulative::new(&chi_f, ic.edges);
        a.push(cp.total() / fund.denom[p]);
        c.push(cc.total() / fund.denom[p]);
        cum_phi.push(cp);
        cum_chi.push(cc);
    }
    let zero = Complex64::new(0.0, 0.0);
    let left_sums = (0..n).map(|m| a[..m].iter().sum()).collect();
    let right_sums = (0..n).map(|m| c[m + 1..].iter().fold(zero, |s, v| s + v)).collect();
    let mut sol = ResolventSolution {
        fund,
        f,
        cum_phi,
        cum_chi,
        left_sums,
        right_sums,
        lambda,
        residual_ode: 0.0,
        residual_bc: 0.0,
        residual_trans: 0.0,
        f_scale: 0.0,
    };
    let (ode, f_sup) = sol.ode_residual(problem);
    sol.f_scale = f_sup;
    sol.residual_ode = if f_sup > 0.0 { ode / f_sup } else { ode };
    sol.residual_bc = sol.bc_residuals(problem);
    sol.residual_trans = sol.trans_residuals(problem);
    Ok(sol)
}

/// `|<R f, g>_H1 - <f, R g>_H1| / (||f|| ||g||)` for real `lambda`.
pub fn resolvent_selfadjointness_check(
    problem: &ValidatedProblem,
    lambda: f64,
    f: Arc<dyn PiecewiseFunction>,
    g: Arc<dyn PiecewiseFunction>,
    tol: f64,
) -> Result<f64> {
    let l = Complex64::new(lambda, 0.0);
    let rf = solve_resolvent(problem, l, f.clone(), tol)?;
    let rg = solve_resolvent(problem, l, g.clone(), tol)?;
    let q = RESOLVENT_QUAD_TOL;
    let lhs = inner_h1(problem, &rf, g.as_ref(), q)?.total;
    let rhs = inner_h1(problem, f.as_ref(), &rg, q)?.total;
    let nf = inner_h1(problem, f.as_ref(), f.as_ref(), q)?.total.re.sqrt();
    let ng = inner_h1(problem, g.as_ref(), g.as_ref(), q)?.total.re.sqrt();
    let scale = nf * ng;
    let diff = (lhs - rhs).norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::function::PiecewisePolynomial;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn diagonal_cases_agree() {
        let p0 = fixtures::validated(fixtures::p0());
        let k = GreensKernel::new(&p0, c(-1.0), 1e-10).unwrap();
        let f = &k.fund;
        let lower = f.phi.value(0, 0.5) * f.chi.value(0, 0.5) / f.denom[0];
        assert!((k.eval(0.5, 0.5).unwrap().value - lower).norm() < 1e-15);
        let g1 = k.eval(0.7, 0.3).unwrap().value;
        let g2 = k.eval(0.3, 0.7).unwrap().value;
        assert!((g1 - g2).norm() < 1e-9 * g1.norm());
    }

    #[test]
    fn rejects_interfaces_and_eigenvalues() {
        let p2 = fixtures::validated(fixtures::p2());
        let k = GreensKernel::new(&p2, c(-2.0), 1e-10).unwrap();
        assert!(matches!(k.eval(0.0, 0.5), Err(Error::InterfacePoint { .. })));
        let s = crate::spectrum::eigenvalues(&p2, (0.0, 5.0), 30, 1e-12).unwrap();
        assert!(matches!(
            GreensKernel::new(&p2, c(s.eigenvalues[0]), 1e-12),
            Err(Error::NearEigenvalue { .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p2 = fixtures::validated(fixtures::p2());
        let zero = Arc::new(PiecewisePolynomial::constant(&p2, 0.0));
        let u = solve_resolvent(&p2, c(-3.0), zero, 1e-10).unwrap();
        for (p, x) in [(0, -0.7), (0, 0.0), (1, 0.0), (1, 0.9)] {
            assert_eq!(u.value(p, x), c(0.0));
        }
    }

    #[test]
    fn constant_rhs_residuals() {
        let p2 = fixtures::validated(fixtures::p2());
        let one = Arc::new(PiecewisePolynomial::constant(&p2, 1.0));
        let u = solve_resolvent(&p2, c(-3.0), one, 1e-10).unwrap();
        assert!(u.residual_ode < 1e-6, "{u:?}");
        assert!(u.residual_bc < 1e-6, "{u:?}");
        assert!(u.residual_trans < 1e-7, "{u:?}");
    }
}
