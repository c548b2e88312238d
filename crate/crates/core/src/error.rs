//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A criterion is undefined for these parameters (e.g. `f_v = 0`).
    #[error("singularity: {0}")]
    Singular(String),

    /// Malformed or inconsistent input data (series, CSV, configs).
    #[error("format error: {0}")]
    Format(String),

    /// GPS logs share no common time window.
    #[error("no temporal overlap between logs ({0})")]
    NoOverlap(String),

    /// Sampling gaps exceeding the configured threshold, as (start, end) pairs.
    #[error("sampling gaps exceed {threshold} s: {intervals:?}")]
    SamplingGaps {
        threshold: f64,
        intervals: Vec<(f64, f64)>,
    },

    /// Every calibration start hit the iteration cap without converging.
    #[error("no calibration start converged out of {0} starts")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for failures of the numerics themselves rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::NoConvergence(_))
    }
}
