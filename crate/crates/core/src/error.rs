use thiserror::Error;

/// Errors raised by instance construction, generation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A serialized instance failed validation; `location` names the offending field.
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
