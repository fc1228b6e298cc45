use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric: entry ({row}, {col}) = {value} but its mirror is {mirror}")]
    NotSymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix M is not positive definite (smallest-eigenvalue upper estimate {estimate:e})")]
    NotPositiveDefinite { estimate: f64 },

    /// A state the analysis says cannot occur when every oracle call succeeded.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("reference oracle failure: {0}")]
    OracleFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Parse { .. } => "parse_error",
            Error::NonFinite(_) => "non_finite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::InternalInconsistency(_) => "internal_inconsistency",
            Error::NumericalDegeneracy(_) => "numerical_degeneracy",
            Error::ContractViolation(_) => "contract_violation",
            Error::OracleFailure(_) => "oracle_failure",
            Error::Io(_) => "io_error",
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
