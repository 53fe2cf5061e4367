use thiserror::Error;

use crate::entity::EntityId;
use crate::event::EventId;
use crate::relation::{NodeRef, StructuralKind};

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("canonical name must be non-empty")]
    EmptyName,
    #[error("invalid entity kind `{0}`")]
    InvalidKind(String),
    #[error("invalid event component `{0}`")]
    InvalidComponent(String),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("{kind} edge {src} -> {dst} violates layer typing")]
    LayerViolation {
        kind: StructuralKind,
        src: NodeRef,
        dst: NodeRef,
    },
    #[error("inclusion {src} -> {dst} would introduce a cycle")]
    InclusionCycle { src: EntityId, dst: EntityId },
    #[error("sequential edge {earlier} -> {later} goes backwards in time")]
    TemporalOrder { earlier: EventId, later: EventId },
    #[error("self-loop on {0}")]
    SelfLoop(NodeRef),
    #[error("event action must be non-empty")]
    EmptyAction,
    #[error("event has no time and no publication date to fall back on")]
    MissingTime,
    #[error("evolutionary timestamp {got} does not match event {event} time {expected}")]
    TimestampMismatch {
        event: EventId,
        expected: chrono::NaiveDate,
        got: chrono::NaiveDate,
    },
    #[error("malformed model file at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported model file version {0}")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
