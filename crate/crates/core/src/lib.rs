//! Numerical solver for Sturm–Liouville boundary-value-transmission problems.
//!
//! The problems handled here consist of the equation
//!
//! ```text
//! -rho_i^2 u''(x) + q(x) u(x) = lambda u(x),   x in (xi_{i-1}, xi_i),  i = 1..n+1
//! ```
//!
//! on a partition `a = xi_0 < xi_1 < ... < xi_n < xi_{n+1} = b`, with boundary
//! conditions at `a` and `b` that depend linearly on the spectral parameter and
//! two linear transmission conditions at every interior point `xi_i`.
//!
//! The crate is organised bottom-up:
//!
//! * [`problem`] holds the problem data, validation and the transmission minors;
//! * [`integrator`] integrates the ODE on one subinterval with dense output;
//! * [`fundamental`] stitches the left and right fundamental solutions through
//!   the interfaces and evaluates the characteristic function;
//! * [`spectrum`] locates eigenvalues and builds normalized eigenfunctions;
//! * [`hilbert`] implements the weighted inner product on `H1 (+) C^2` and the
//!   eigenfunction expansion;
//! * [`resolvent`] evaluates the Green's kernel and solves the inhomogeneous problem;
//! * [`oracle`] is an independent finite-difference discretization used to
//!   cross-check everything above.

pub mod error;
pub mod fixtures;
pub mod fundamental;
pub mod function;
pub mod hilbert;
pub mod integrator;
pub mod oracle;
pub mod problem;
pub mod problem_file;
pub mod quadrature;
pub mod resolvent;
pub mod roots;
pub mod spectrum;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use function::{AugmentedFunction, FnPiecewise, LinearCombination, PiecewiseFunction, PiecewisePolynomial};
pub use fundamental::{
    build_chi, build_phi, characteristic, omega_i, transmit_backward, transmit_forward,
    CharacteristicValue, PiecewiseSolution, SolutionKind,
};
pub use hilbert::{
    boundary_functional, boundary_identity_check, check_orthogonality, expand, gram_matrix,
    inner_h, inner_h1, norm_h, wronskian_transmission_identity, BoundaryFunctional, EigenBasis,
    ExpansionResult, InnerProductReport,
};
pub use integrator::{integrate_ivp, wronskian_at, Direction, SolutionTrace, Start, ValuePair};
pub use oracle::{
    assemble_pencil, oracle_eigenvalues, oracle_solve, pencil_eigenvalues, OracleSolution,
    OracleSpectrum, PencilPair,
};
pub use problem_file::{load_problem, parse_problem, read_problem_spec, to_toml_string};
pub use problem::{
    theta_minor, validate_problem, Endpoint, Polynomial, ProblemSpec, TransmissionMatrix,
    ValidatedProblem,
};
pub use resolvent::{
    greens, resolvent_selfadjointness_check, solve_resolvent, GreensEvaluation, GreensKernel,
    ResolventSolution,
};
pub use spectrum::{
    bracket_roots, eigenfunction, eigenvalues, lowest_eigenvalues, refine_root,
    normalized_eigenfunction, sample_characteristic, Eigenfunction, RootDiagnostics, Spectrum,
};

/// Default local tolerance of the IVP integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default convergence tolerance of the composite quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;
