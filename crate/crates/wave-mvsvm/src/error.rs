//! Error type shared across the crate.

use crate::solver::ConvergenceTrace;

/// Errors produced by training, evaluation, and I/O routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mismatched dimensions between matrices, vectors, or views.
    #[error("shape error: {0}")]
    Shape(String),

    /// Non-finite or otherwise out-of-domain numeric input.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid argument or dataset (wrong label alphabet, empty split, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Malformed file contents (CSV cells, model schema, config lines).
    #[error("format error: {0}")]
    Format(String),

    /// A numeric procedure failed (singular system, non-finite objective).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The ADMM objective blew up; the trace up to the failure is attached.
    #[error("solver diverged at iteration {iter}: objective {objective:e}")]
    Divergence {
        iter: usize,
        objective: f64,
        trace: ConvergenceTrace,
    },

    /// A cross-validation fold lost one of the classes entirely.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// Rank statistics are undefined for this configuration.
    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
