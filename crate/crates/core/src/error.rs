use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An invariant check failed; `residual` is the measured violation.
    #[error("validation error: {what} (residual {residual:e})")]
    Validation { what: String, residual: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance")]
    NotPositive { eigenvalue: f64 },

    #[error("unsupported size: {0}")]
    Unsupported(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl Error {
    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn validation(what: impl Into<String>, residual: f64) -> Self {
        Error::Validation {
            what: what.into(),
            residual,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
