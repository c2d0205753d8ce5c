use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("index out of range: {index} (len {len})")]
    Index { index: usize, len: usize },

    #[error("tail saturation: model cdf is {cdf} at sample point {point}")]
    TailSaturation { point: f64, cdf: f64 },

    #[error("sparse bin: bin {bin} holds {count} entities (minimum 3); try fewer bins")]
    SparseBin { bin: usize, count: usize },

    #[error("no variation: {0}")]
    NoVariation(String),

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("invalid cell (a={a}, b={b}): {reason}")]
    InvalidCell { a: f64, b: f64, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("format error at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by data or I/O.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Domain(_)
                | Error::DegenerateModel(_)
                | Error::InsufficientData(_)
                | Error::InvalidCell { .. }
        )
    }
}
