use thiserror::Error;

/// Errors surfaced by the recovery library.
#[derive(Debug, Error)]
pub enum SlrError {
    /// Shape or grid mismatch between operands.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid parameter value (non-positive epsilon, infeasible acceleration, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Numerical failure (non-Hermitian input, non-finite iterates, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Array file I/O failure; carries the offending path.
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, SlrError>;
