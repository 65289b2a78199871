use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("option `{option}` attribute `{attr}`: {message}")]
    Validation {
        option: String,
        attr: String,
        message: String,
    },

    #[error("duplicate option id `{0}`")]
    DuplicateId(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute `{attr}` is {actual}, expected {expected}")]
    KindMismatch {
        attr: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid preference on `{attr}`: {message}")]
    Preference { attr: String, message: String },

    #[error("preference model is empty")]
    EmptyModel,

    #[error("every attribute already carries a stated preference")]
    NoUnstatedAttributes,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid catalog spec: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
