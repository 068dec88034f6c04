use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The loop (or one of its factors) comes too close to a singular value
    /// somewhere on the unit circle.
    #[error("not invertible on the unit circle (measured margin {margin:.3e})")]
    NotInvertible { margin: f64 },

    #[error("truncation error: discarded l1 tail mass {tail_mass:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { tail_mass: f64, tolerance: f64 },

    #[error("numeric error: {message} (last residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },

    #[error("index obstruction: {0}")]
    IndexObstruction(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            residual,
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
