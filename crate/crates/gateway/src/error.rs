use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("config: {0}")]
    Config(String),
    #[error("{role} path {} does not exist", path.display())]
    MissingPath { role: &'static str, path: PathBuf },
    #[error("stage {stage}{}: {message}", doc.as_ref().map(|d| format!(" (document {d})")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        doc: Option<String>,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl GatewayError {
    pub fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        GatewayError::Stage { stage, doc: None, message: e.to_string() }
    }

    pub fn at_doc(stage: &'static str, doc: &str, e: impl std::fmt::Display) -> Self {
        GatewayError::Stage { stage, doc: Some(doc.to_string()), message: e.to_string() }
    }
}

pub fn read(path: &std::path::Path) -> Result<String, GatewayError> {
    std::fs::read_to_string(path).map_err(|source| GatewayError::Io { path: path.to_path_buf(), source })
}
