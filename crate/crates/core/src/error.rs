use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported matrix market field or layout: {0}")]
    Unsupported(String),

    #[error("entry ({row}, {col}) outside declared {nrows}x{ncols} bounds")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("diagonal entry {index} is missing or zero")]
    ZeroDiagonal { index: usize },

    #[error("incomplete Cholesky breakdown at column {column} (pivot {pivot})")]
    Breakdown { column: usize, pivot: f64 },

    #[error("incomplete LU zero pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("dependence graph contains a cycle")]
    Cycle,

    #[error("unknown kernel combination `{0}`")]
    UnknownCombo(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for numerical failures raised by kernel bodies.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroDiagonal { .. } | Error::Breakdown { .. } | Error::ZeroPivot { .. }
        )
    }
}
