use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension k={k} out of range for a graph on {n} vertices")]
    DimensionOutOfRange { k: usize, n: usize },

    #[error("graphs are limited to {max} vertices, got {n}")]
    TooManyVertices { n: usize, max: usize },

    #[error("no cliques of dimension {k} found after {trials} trials")]
    NoCliques { k: usize, trials: u64 },

    #[error("empty basis: no cliques of dimension {k}")]
    EmptyBasis { k: usize },

    #[error("index ({i}, {j}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, dim: usize },

    #[error("exhausted column {col}: requested nonzero {ell} of {count}")]
    ExhaustedColumn { col: usize, ell: usize, count: usize },

    #[error("duplicate entry ({i}, {j})")]
    DuplicateEntry { i: usize, j: usize },

    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("dense eigendecomposition limited to dimension {max}, got {dim}")]
    DenseTooLarge { dim: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase scale violation: lambda_max * scale = {0} exceeds 1/2")]
    ScaleViolation(f64),

    #[error("norm violation: lambda_max = {0} exceeds 1")]
    NormViolation(f64),

    #[error("zero trace")]
    ZeroTrace,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            msg: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
