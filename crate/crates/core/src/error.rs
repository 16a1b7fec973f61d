use thiserror::Error;

use crate::problem::Endpoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the solver.
///
/// Interface and piece numbers in messages are 1-based, matching the usual
/// mathematical numbering `xi_1..xi_n` and `Omega_1..Omega_{n+1}`; the fields
/// themselves hold the 0-based indices used throughout the API.
#[derive(Debug, Error)]
pub enum Error {
    #[error("partition is not strictly increasing: {0}")]
    NonIncreasingPartition(String),

    #[error("rho on piece {} is {value}, must be positive", .piece + 1)]
    NonPositiveRho { piece: usize, value: f64 },

    #[error("ThetaDegenerate: theta_{pair} at interface {} is {value}, must be positive", .interface + 1)]
    ThetaDegenerate {
        interface: usize,
        pair: &'static str,
        value: f64,
    },

    #[error("KappaNonPositive: kappa at the {end} endpoint is {value}, must be positive")]
    KappaNonPositive { end: Endpoint, value: f64 },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid column pair ({j}, {k}); need 1 <= j < k <= 4")]
    BadColumnPair { j: usize, k: usize },

    #[error("step size underflow on piece {} at x = {x}", .piece + 1)]
    StepSizeUnderflow { piece: usize, x: f64 },

    #[error("non-finite solution state on piece {} at x = {x}", .piece + 1)]
    NonFiniteState { piece: usize, x: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error(
        "Wronskian recursion violated at interface {}: relative error {violation:e}",
        .interface + 1
    )]
    ConsistencyViolation { interface: usize, violation: f64 },

    #[error("no sign change of the characteristic function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root refinement on [{lo}, {hi}] did not converge after {iterations} iterations")]
    MaxIterations { lo: f64, hi: f64, iterations: usize },

    #[error("lambda = {lambda} is not an eigenvalue: right boundary residual {residual:e}")]
    NotAnEigenvalue { lambda: f64, residual: f64 },

    #[error("quadrature on piece {} did not converge (last change {change:e})", .piece + 1)]
    QuadratureFailure { piece: usize, change: f64 },

    #[error("requested {requested} eigenvalues but only {found} were found")]
    InsufficientEigenvalues { requested: usize, found: usize },

    #[error("lambda = {lambda} is too close to an eigenvalue (|omega| = {abs_omega:e})")]
    NearEigenvalue { lambda: num_complex::Complex64, abs_omega: f64 },

    #[error("x = {x} lies on an interface point")]
    InterfacePoint { x: f64 },

    #[error("x = {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("linear system is singular (zero pivot in column {column})")]
    SingularSystem { column: usize },

    #[error("generalized eigenvalue routine failed: {0}")]
    Eigensolver(String),

    #[error("{}", match .line { Some(l) => format!("parse error at line {l}: {message}"), None => format!("parse error: {message}") })]
    Parse { line: Option<usize>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonIncreasingPartition(_)
                | Error::NonPositiveRho { .. }
                | Error::ThetaDegenerate { .. }
                | Error::KappaNonPositive { .. }
                | Error::InvalidProblem(_)
                | Error::BadColumnPair { .. }
                | Error::InterfacePoint { .. }
                | Error::OutOfDomain { .. }
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}
