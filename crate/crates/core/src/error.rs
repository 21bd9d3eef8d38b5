//! Crate-wide error type and result alias.
//!
//! Errors fall into two broad classes that front ends may want to
//! distinguish: data problems (malformed input, failed validation,
//! dangling references) and numerical problems (non-convergence,
//! singular systems). [`Error::is_data_error`] exposes the split.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file could not be parsed; `line` is 1-based and counts the
    /// header, so it matches what an editor shows.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input parsed but violates a structural or semantic rule.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A record refers to an id that does not exist.
    #[error("dangling reference: {0}")]
    DanglingReference(String),

    /// An argument or table has the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Sampling asked for more distinct alternatives than exist.
    #[error("cannot sample {requested} alternatives from {available} candidates")]
    InsufficientAlternatives { requested: usize, available: usize },

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// A linear system could not be solved even after regularisation.
    #[error("singular or indefinite hessian: {0}")]
    SingularHessian(String),

    /// A quantity that must be finite and positive was not.
    #[error("degenerate value: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for errors caused by the input data rather than by the
    /// numerics of an otherwise well-posed problem.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::NonConvergence { .. } | Error::SingularHessian(..) | Error::Degenerate(..)
        )
    }
}

impl From<(PathBuf, std::io::Error)> for Error {
    fn from((path, source): (PathBuf, std::io::Error)) -> Self {
        Error::Io { path, source }
    }
}
