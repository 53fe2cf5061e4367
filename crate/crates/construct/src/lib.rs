//! Structural-part construction, model fusion and evolutionary-relation rules.

pub mod alias;
pub mod classify;
pub mod cluster;
mod error;
pub mod external;
pub mod fusion;
pub mod rules;
pub mod skg;

pub use alias::AliasIndex;
pub use classify::{Classifier, RuleSpec, Target};
pub use cluster::{cluster_unmatched, UnmatchedCluster};
pub use error::ConstructError;
pub use external::{merge_external, ExternalRecord, FileKgClient, HttpKgClient, KgClient, KgRecord, MergeReport, OfflineKgClient};
pub use fusion::{Fuser, FusionReport, LinkResult, Outcome};
pub use rules::{apply_rules, evaluate_rules, instantiate, Coverage, EdgeTemplate, Rule, RuleReport, Rulebase, Slot};
pub use skg::{ingest_triples, parse_triples, skg_stats, IngestReport, PredicateMap, RawTriple, SkgStats, TripleFormat};
