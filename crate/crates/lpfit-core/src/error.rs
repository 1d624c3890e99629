//! Library error type.

use thiserror::Error;

/// Errors produced by estimation, bound evaluation, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A point, parameter vector, or experiment does not have the expected
    /// dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The experiment contains no observation pairs.
    #[error("experiment contains no observation pairs")]
    EmptyExperiment,

    /// No usable data remains for the requested group (all pairs removed by
    /// sanitization, or no candidate transform can be formed).
    #[error("degenerate experiment for the requested group: {0}")]
    DegenerateExperiment(String),

    /// A scalar or vector argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A feasibility problem has no solution in its search domain.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
