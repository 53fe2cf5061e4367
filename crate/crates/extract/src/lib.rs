//! Joint event extraction and event-relation identification.

pub mod checkpoint;
pub mod crf;
pub mod diagnostics;
pub mod emission;
pub mod encoder;
mod error;
pub mod extract;
pub mod model;
pub mod optim;
pub mod relation;
pub mod sample;
pub mod scalar;
pub mod synthetic;
pub mod tags;
pub mod train;

pub use checkpoint::Checkpoint;
pub use crf::{crf_log_partition, crf_nll_grad, path_score, viterbi_decode};
pub use emission::{emissions, EmissionState};
pub use encoder::{tokenize, EncoderConfig};
pub use diagnostics::{Diagnostic, DiagnosticsLog};
pub use error::ExtractError;
pub use extract::{assemble, assemble_tags, extract, extract_title, record, pair_sentences, Extraction, TitlePair};
pub use model::{JointModel, ModelConfig, PairPrediction, Params, Potentials, PreparedPair, SentencePrediction};
pub use optim::AdamConfig;
pub use relation::{joint_loss, relation_forward, relation_loss, RelationDistribution, RelationLabel};
pub use sample::TrainingSample;
pub use scalar::Scalar;
pub use tags::{Span, Tag, NUM_TAGS};
pub use train::{evaluate, fit, train, Metrics, TrainConfig, TrainReport};

pub type JointModelF64 = JointModel<f64>;
pub type JointModelF32 = JointModel<f32>;
