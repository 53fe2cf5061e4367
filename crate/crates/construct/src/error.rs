use msem_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("rule pattern `{pattern}` does not compile: {message}")]
    Pattern { pattern: String, message: String },
    #[error("classifier priority {0} is used by more than one rule")]
    DuplicatePriority(i64),
    #[error("classifier rulebase is empty")]
    EmptyRulebase,
    #[error("rule `{rule}`: {message}")]
    InvalidRule { rule: String, message: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("external knowledge source unavailable: {0}")]
    Unavailable(String),
    #[error("external knowledge source returned a malformed response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
