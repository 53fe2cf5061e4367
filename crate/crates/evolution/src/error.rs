use chrono::NaiveDate;
use msem_core::{EntityId, Layer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("snapshot times must be strictly increasing: {prev} then {next} at position {index}")]
    UnorderedTimes {
        index: usize,
        prev: NaiveDate,
        next: NaiveDate,
    },
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("{entity} is not in the {expected:?} layer")]
    WrongLayer { entity: EntityId, expected: Layer },
}
