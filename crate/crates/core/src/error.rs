use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown item id {0}")]
    UnknownItem(u32),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The database carries only one of the two labels.
    #[error("database has no transactions labeled {0}")]
    SingleLabel(&'static str),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
