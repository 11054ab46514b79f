use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ingestion error at row {row}, column `{column}`: {reason}")]
    Ingestion {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown scenario family `{0}`")]
    UnknownFamily(String),

    #[error("both classes must be present (n0 = {n0}, n1 = {n1})")]
    MissingClass { n0: usize, n1: usize },

    #[error("singular covariance matrix in {0}")]
    SingularCovariance(&'static str),

    #[error("operation `{op}` is not supported for {model} models")]
    Unsupported { op: &'static str, model: &'static str },

    #[error("smoother weights undefined: zero kernel mass at the query point")]
    ZeroDenominator,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("permutation replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("condition violated: {0}")]
    Condition(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
