//! Pool-based active learning for the joint extractor.

pub mod cost;
mod error;
pub mod learner;
pub mod pool;
pub mod simulate;
pub mod strategy;

pub use cost::{annotation_cost, triples, CostReport, CostRow, TagTriple, TripleSet};
pub use error::ActiveError;
pub use learner::{ActiveLearner, Annotator, LoopConfig, PendingBatch, SimulatedOracle, StopCondition, StopReason};
pub use pool::{Pool, RawPair};
pub use strategy::{select_batch, SelectionScore, Strategy};
pub use simulate::{learning_curve, simulated_pool, Curve, CurvePoint};
