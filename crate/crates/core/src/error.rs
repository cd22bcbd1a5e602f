use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{transform}: argument {value} outside domain ({bound})")]
    Domain {
        transform: &'static str,
        value: f64,
        bound: String,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("no closed form: {0}")]
    NoClosedForm(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("numerical failure in {module} at step {step}: {message}")]
    Numerical {
        module: &'static str,
        step: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(module: &'static str, step: usize, message: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            step,
            message: message.into(),
        }
    }
}
