//! Shared error type for every numerical and configuration failure mode.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    NotSquare {
        rows: usize,
        cols: usize,
    },
    NonFinite {
        context: &'static str,
    },
    NotSymmetric {
        op: &'static str,
        max_asymmetry: f64,
    },
    /// Cholesky factorization hit a non-positive pivot; carries its index.
    NotPositiveDefinite {
        pivot: usize,
    },
    /// Riccati fixed-point iteration failed to converge. Usually means the
    /// stabilizability or detectability assumption on the system is violated.
    RiccatiDiverged {
        iterations: usize,
        residual: f64,
    },
    UnstableClosedLoop {
        rho: f64,
    },
    NonFiniteControl {
        step: usize,
    },
    PathLength {
        expected: usize,
        got: usize,
    },
    /// Operation not defined for this process or policy (e.g. sampling an
    /// adversarial disturbance set, vertex evaluation of a nonlinear policy).
    Unsupported {
        what: &'static str,
    },
    WindowExceedsPredictions {
        window: usize,
        k: usize,
    },
    TreeBudgetExceeded {
        nodes: u64,
        limit: u64,
    },
    VertexBudgetExceeded {
        bits: usize,
        limit: usize,
    },
    GridTooCoarse {
        change: f64,
        tolerance: f64,
    },
    NonPositiveDenominator {
        value: f64,
    },
    Config(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, left, right } => write!(
                f,
                "{op}: dimension mismatch, left is {}x{}, right is {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::NotSymmetric { op, max_asymmetry } => write!(
                f,
                "{op}: matrix not symmetric, max |a_ij - a_ji| = {max_asymmetry:e}"
            ),
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite, pivot {pivot} failed")
            }
            Error::RiccatiDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "Riccati iteration did not converge after {iterations} steps \
                 (last residual {residual:e}); check stabilizability of (A, B) \
                 and detectability of (A, Q)"
            ),
            Error::UnstableClosedLoop { rho } => write!(
                f,
                "closed-loop spectral radius {rho} >= 1 after Riccati solve"
            ),
            Error::NonFiniteControl { step } => {
                write!(f, "policy returned a non-finite control at step {step}")
            }
            Error::PathLength { expected, got } => {
                write!(f, "disturbance path length {got}, expected {expected}")
            }
            Error::Unsupported { what } => write!(f, "unsupported operation: {what}"),
            Error::WindowExceedsPredictions { window, k } => write!(
                f,
                "prediction window of length {window} exceeds policy demand k={k}"
            ),
            Error::TreeBudgetExceeded { nodes, limit } => {
                write!(f, "scenario tree exceeds node budget ({nodes} > {limit})")
            }
            Error::VertexBudgetExceeded { bits, limit } => write!(
                f,
                "vertex enumeration needs 2^{bits} rollouts, limit is 2^{limit}"
            ),
            Error::GridTooCoarse { change, tolerance } => write!(
                f,
                "grid refinement changed value by {change:e} > tolerance {tolerance:e}"
            ),
            Error::NonPositiveDenominator { value } => {
                write!(f, "performance ratio denominator {value} is not positive")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
