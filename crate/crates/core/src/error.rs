use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or distribution parameter is outside its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    /// An operation was called with inputs that violate its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The emission target cannot be met by any policy assignment.
    #[error("infeasible emission target: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
