//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the modeling, sampling, and diagnostic routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A distribution or model parameter violates its constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested evaluation point lies outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integer argument lies outside the supported range.
    #[error("range error: {0}")]
    Range(String),

    /// Tensor or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An index is out of bounds for the network or state.
    #[error("index out of bounds: {0}")]
    Index(String),

    /// A computation needs an observed entry that is masked as missing.
    #[error("masked entry at ({i}, {j}, t={t}); impute or restrict the computation to observed slices")]
    MaskedEntry { i: usize, j: usize, t: usize },

    /// A statistic cannot be computed from a degenerate (constant) sequence.
    #[error("degenerate sequence: {0}")]
    Degenerate(String),

    /// The chain or sequence is too short for the requested diagnostic.
    #[error("insufficient draws: {0}")]
    InsufficientDraws(String),

    /// Sampler or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The likelihood could not be evaluated at the requested point.
    #[error("likelihood evaluation failed: {0}")]
    Likelihood(String),

    /// No missing entries to impute.
    #[error("network has no missing entries")]
    NoMissingEntries,
}

pub type Result<T> = std::result::Result<T, Error>;
