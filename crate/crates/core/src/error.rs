use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates the precondition of the routine it was passed to.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The grid cannot represent what was asked of it.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A quadrature did not reach its accuracy target.
    #[error("quadrature did not converge: estimate {estimate:e} with error {error_estimate:e}")]
    Accuracy { estimate: f64, error_estimate: f64 },

    /// Input data violates a sign or support requirement.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The operation is not available for this domain or operator.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A linear solve failed even after regularization.
    #[error("singular system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
