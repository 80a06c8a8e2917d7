use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("record {record}: missing or invalid field `{field}`")]
    Validation { record: String, field: String },

    #[error("misconfiguration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("asset `{name}`: {message}")]
    Asset { name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn asset(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Asset {
            name: name.into(),
            message: message.into(),
        }
    }
}
