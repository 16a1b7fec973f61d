//! Canonical test problems.
//!
//! * `P0`: `-u'' = lambda u` on `[0, 1]` with `u(0) = lambda u'(0)` and
//!   `u(1) = -lambda u'(1)`, no interfaces.
//! * `P1`: `P0` split at `0.5` by a continuity interface (transparent).
//! * `P2`: `[-1, 1]` split at `0` with `rho = (1, 2)` and the jump
//!   `u(0+) = 2 u(0-)`, `u'(0+) = u'(0-) / 2`; same boundary data as `P0`.
//!
//! The same problems ship as files under `fixtures/` at the repository root.

use crate::problem::{validate_problem, Polynomial, ProblemSpec, TransmissionMatrix, ValidatedProblem};

const BOUNDARY: [f64; 4] = [1.0, 0.0, 0.0, -1.0];

pub fn p0() -> ProblemSpec {
    ProblemSpec {
        a: 0.0,
        b: 1.0,
        xi: vec![],
        rho: vec![1.0],
        q: vec![Polynomial::zero()],
        delta: BOUNDARY,
        gamma: BOUNDARY,
        trans: vec![],
    }
}

pub fn p1() -> ProblemSpec {
    ProblemSpec {
        a: 0.0,
        b: 1.0,
        xi: vec![0.5],
        rho: vec![1.0, 1.0],
        q: vec![Polynomial::zero(), Polynomial::zero()],
        delta: BOUNDARY,
        gamma: BOUNDARY,
        trans: vec![TransmissionMatrix::new(
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
        )],
    }
}

pub fn p2() -> ProblemSpec {
    ProblemSpec {
        a: -1.0,
        b: 1.0,
        xi: vec![0.0],
        rho: vec![1.0, 2.0],
        q: vec![Polynomial::zero(), Polynomial::zero()],
        delta: BOUNDARY,
        gamma: BOUNDARY,
        trans: vec![TransmissionMatrix::new(
            [1.0, 0.0, -0.5, 0.0],
            [0.0, 1.0, 0.0, -2.0],
        )],
    }
}

/// All three fixtures, validated, with their names.
pub fn all() -> Vec<(&'static str, ValidatedProblem)> {
    [("P0", p0()), ("P1", p1()), ("P2", p2())]
        .into_iter()
        .map(|(name, spec)| (name, validate_problem(spec).expect("fixtures are valid")))
        .collect()
}

pub fn validated(spec: ProblemSpec) -> ValidatedProblem {
    validate_problem(spec).expect("fixture must validate")
}
