//! Layered temporal graph store for multilayer service-ecosystem models.
//!
//! Four layers (events, stakeholders, services & features, domains) hold
//! [`Entity`] and [`Event`] nodes. Time-invariant [`StructuralRelation`]s are
//! typed by layer; [`EvolutionaryRelation`]s carry a timestamp and the event
//! they were derived from, and [`Model::snapshot_at`] slices them by time.

mod entity;
mod error;
mod event;
mod io;
mod model;
mod relation;
mod snapshot;
pub mod text;

pub use entity::{Entity, EntityId, EntityKind, Layer};
pub use error::CoreError;
pub use event::{Component, Event, EventDraft, EventId, Mention};
pub use io::FORMAT_VERSION;
pub use model::{Model, SharedModel};
pub use relation::{
    EvolutionId, EvolutionaryRelation, NodeRef, Quintuple, StructuralId, StructuralKind,
    StructuralRelation,
};
pub use snapshot::ModelSnapshot;
