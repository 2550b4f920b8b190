use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration key is missing, malformed, or violates an invariant.
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("infeasible parameter preferences: {0}")]
    Infeasible(String),

    #[error("empty image")]
    EmptyImage,

    #[error("no target ridge survived the length gate")]
    NoTargetRidge,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
