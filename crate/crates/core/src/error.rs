use thiserror::Error;

/// Errors raised by model construction, field parsing and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("interpolation parameter {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("variable x{index} out of range for dimension {dim}")]
    VariableIndexOutOfRange { index: usize, dim: usize },

    #[error("non-finite result: {0}")]
    NonFiniteResult(String),

    #[error("input must be strictly positive: {0}")]
    NonPositiveInput(&'static str),

    #[error("improved_mean bound requires an estimate of E(f - Ef)+")]
    MissingMeanPosPart,

    #[error("bound `{bound}` is not valid for field `{field}`")]
    InvalidBoundForField { bound: String, field: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
