use thiserror::Error;

/// Errors raised by the estimation and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoxError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no observed events; the partial likelihood is undefined")]
    NoEvents,

    #[error("coefficient vector contains non-finite values")]
    NonFiniteBeta,

    #[error("all covariates are constant: lambda_max is zero")]
    DegenerateLambdaMax,

    #[error("cross-validation folds could not be drawn with events in every split after {0} attempts")]
    FoldAssignment(usize),

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("singular matrix")]
    Singular,

    #[error("separation detected: coefficient norm exceeded {0}")]
    Separation(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoxError {
    fn from(e: std::io::Error) -> Self {
        CoxError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoxError>;
