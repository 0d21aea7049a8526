use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("canonicalization failed: {0}")]
    Canonicalization(String),
    #[error("unknown signature algorithm `{0}`")]
    Algorithm(String),
    #[error("malformed key: {0}")]
    Key(String),
    #[error("unknown sensitive field `{0}`")]
    Field(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("invalid time `{0}`")]
    Time(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
