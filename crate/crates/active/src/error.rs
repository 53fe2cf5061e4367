use msem_extract::ExtractError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error("unlabeled pool is empty")]
    EmptyPool,
    #[error("sample pair {0} has no tokens")]
    EmptyPair(u64),
    #[error("sample {0} is not in the unlabeled pool")]
    NotInPool(u64),
    #[error("sample id {0} used twice")]
    DuplicateId(u64),
    #[error("labels do not match the pending batch: {0}")]
    BatchMismatch(String),
    #[error("no model has been trained yet")]
    NotTrained,
    #[error("no batch is pending")]
    NoPendingBatch,
    #[error("a batch is already pending")]
    BatchPending,
    #[error("annotator failed: {0}")]
    Annotator(String),
    #[error("pool state line {line}: {message}")]
    PoolState { line: usize, message: String },
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
