use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("matrix is not symmetric: M[{row}][{col}] != M[{col}][{row}]")]
    NotSymmetric { row: usize, col: usize },

    #[error("support function must exceed 1, found {value} at node {node}")]
    PhiNotAboveOne { node: usize, value: f64 },

    #[error("tensor A[phi] is not positive definite at node {node} (min eigenvalue {min_eig:e})")]
    NotHConvex { node: usize, min_eig: f64 },

    #[error("field is not even under the antipodal map (max gap {gap:e})")]
    NotEven { gap: f64 },

    #[error("function must be positive, found {value} at node {node}")]
    NonPositive { node: usize, value: f64 },

    #[error("regime condition violated: {0}")]
    Regime(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular linear system (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
