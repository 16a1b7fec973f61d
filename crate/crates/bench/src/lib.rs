//! Shared inputs for the benchmarks in `benches/`.

use bvtp_core::{fixtures, Polynomial, ProblemSpec, TransmissionMatrix, ValidatedProblem};

/// A problem with `pieces` layers of alternating speed and unit jumps,
/// for scaling measurements in the number of interfaces.
pub fn layered(pieces: usize) -> ValidatedProblem {
    let h = 2.0 / pieces as f64;
    let xi = (1..pieces).map(|i| -1.0 + h * i as f64).collect();
    let rho = (0..pieces).map(|i| if i % 2 == 0 { 1.0 } else { 1.5 }).collect();
    let trans = (1..pieces)
        .map(|_| TransmissionMatrix::new([1.0, 0.0, -0.8, 0.0], [0.0, 1.0, 0.0, -1.25]))
        .collect();
    fixtures::validated(ProblemSpec {
        a: -1.0,
        b: 1.0,
        xi,
        rho,
        q: vec![Polynomial::new(vec![0.5, 0.0, 1.0]); pieces],
        delta: [1.0, 0.0, 0.0, -1.0],
        gamma: [1.0, 0.0, 0.0, -1.0],
        trans,
    })
}
