use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square with n >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge: remaining off-diagonal norm {off_norm:e} after {sweeps} sweeps")]
    NoConvergence { off_norm: f64, sweeps: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {value:e} below -{threshold:e}")]
    NotPsd { value: f64, threshold: f64 },

    #[error("columns are numerically dependent at column {column}")]
    RankDeficient { column: usize },

    #[error("input is not column-orthonormal: max |VᵀV - I| = {deviation:e}")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse {text:?} as a number")]
    ParseCell {
        line: u64,
        column: usize,
        text: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("kernel evaluation produced a non-finite value for pair ({i}, {j})")]
    KernelOverflow { i: usize, j: usize },

    #[error("median pairwise distance is zero; all sampled points coincide")]
    DegenerateData,

    #[error("percent error is undefined for a zero matrix")]
    ZeroMatrix,

    #[error("spectrum is all zero")]
    ZeroSpectrum,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
