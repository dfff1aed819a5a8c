use thiserror::Error;

/// Errors raised by the engine. Each variant carries enough context to be
/// shown to a user as-is.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is undefined at {value}: {reason}")]
    Domain {
        what: &'static str,
        value: f64,
        reason: String,
    },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("{operation} is not available for the {family} family")]
    Unsupported {
        operation: &'static str,
        family: &'static str,
    },

    #[error("root search failed: {0}")]
    Bracket(String),

    #[error("numerical accuracy check failed: {0}")]
    Accuracy(String),

    #[error("convexity check failed: {0}")]
    Convexity(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the problem violating a standing assumption,
    /// as opposed to malformed input or numerical trouble.
    pub fn is_assumption(&self) -> bool {
        matches!(self, Error::Assumption(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
