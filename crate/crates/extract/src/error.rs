use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("tag sequence length {tags} does not match {positions} positions")]
    LengthMismatch { tags: usize, positions: usize },
    #[error("tag {tag} is not allowed at position {position}")]
    DisallowedTag { position: usize, tag: usize },
    #[error("invalid tag `{0}`")]
    InvalidTag(String),
    #[error("invalid relation label `{0}`")]
    InvalidRelation(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no training samples")]
    NoSamples,
    #[error("malformed sample on line {line}: {message}")]
    Sample { line: usize, message: String },
    #[error("empty sentence pair")]
    EmptyPair,
    #[error("first title must be non-empty")]
    EmptyTitle,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
