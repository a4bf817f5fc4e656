//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Errors raised by construction, solvers and the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group {0} has zero probability mass")]
    DegenerateGroup(usize),

    #[error("unsupported cardinality: {0}")]
    UnsupportedCardinality(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("projection did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("{0}")]
    Unbounded(String),

    #[error("round {round}: {message}\nstate: {state}")]
    RoundFailed {
        round: u64,
        message: String,
        state: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
