//! Community evolution across model snapshots and per-stakeholder storylines.

pub mod community;
mod error;
pub mod graph;
pub mod louvain;
pub mod report;
pub mod snapshots;
pub mod storyline;

pub use community::{
    align_communities, classify_events, communities_of, detect_communities, jaccard, AlignedPair, AlignmentMap, Community,
    EventKind, EvolutionEvent, DEFAULT_KEY_NODES, DEFAULT_THETA,
};
pub use error::EvolutionError;
pub use graph::{modularity, project, Graph};
pub use louvain::louvain;
pub use report::{evolution_report, EvolutionConfig, EvolutionReport, Window};
pub use snapshots::build_snapshots;
pub use storyline::{feature_closure, render_timeline, storyline, storyline_with, Closure, StorylineEntry};
