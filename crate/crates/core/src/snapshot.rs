use chrono::NaiveDate;
use serde::Serialize;

use crate::entity::Entity;
use crate::relation::{EvolutionaryRelation, StructuralRelation};

/// Time-sliced view: every structural edge, evolutionary edges with `timestamp <= at`.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSnapshot<'a> {
    pub at: NaiveDate,
    pub entities: &'a [Entity],
    pub structural: &'a [StructuralRelation],
    pub evolutionary: Vec<&'a EvolutionaryRelation>,
}

impl ModelSnapshot<'_> {
    pub fn is_subset_of(&self, later: &ModelSnapshot<'_>) -> bool {
        self.evolutionary
            .iter()
            .all(|e| later.evolutionary.iter().any(|l| l.id == e.id))
    }
}
