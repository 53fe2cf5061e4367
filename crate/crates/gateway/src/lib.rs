//! Pipeline orchestration, CLI plumbing and the HTTP service.

pub mod config;
pub mod corpus;
mod error;
pub mod pipeline;
pub mod server;

pub use config::{PipelineConfig, SeedStream};
pub use corpus::{parse_corpus, Corpus, CorpusDoc};
pub use error::GatewayError;
pub use pipeline::{construct, construct_until, run_pipeline, ExitReport, PipelineRun, Stage};
pub use server::{router, serve, AppState};
