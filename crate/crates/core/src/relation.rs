use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::entity::EntityId;
use crate::event::EventId;

/// Endpoint of a structural relation: entities and events share the edge table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRef {
    Entity(EntityId),
    Event(EventId),
}

impl From<EntityId> for NodeRef {
    fn from(id: EntityId) -> Self {
        NodeRef::Entity(id)
    }
}

impl From<EventId> for NodeRef {
    fn from(id: EventId) -> Self {
        NodeRef::Event(id)
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Entity(id) => id.fmt(f),
            NodeRef::Event(id) => id.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructuralKind {
    Equivalence,
    Inclusion,
    Overlap,
    HasActor,
    HasRecipient,
    HasObject,
    BelongTo,
    Sequential,
}

impl StructuralKind {
    pub fn is_semantic(self) -> bool {
        matches!(
            self,
            StructuralKind::Equivalence | StructuralKind::Inclusion | StructuralKind::Overlap
        )
    }
}

impl fmt::Display for StructuralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructuralId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralRelation {
    pub id: StructuralId,
    pub src: NodeRef,
    pub dst: NodeRef,
    pub kind: StructuralKind,
}

impl StructuralRelation {
    /// Whether this edge connects `a` to `b`; Equivalence answers in both directions.
    pub fn connects(&self, a: NodeRef, b: NodeRef) -> bool {
        (self.src == a && self.dst == b)
            || (self.kind == StructuralKind::Equivalence && self.src == b && self.dst == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvolutionId(pub u32);

/// The (source, destination, relation, timestamp, additionalAttributes) quintuple,
/// before it is attached to the model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quintuple {
    pub source: EntityId,
    pub destination: EntityId,
    pub relation: String,
    pub timestamp: NaiveDate,
    pub attributes: BTreeMap<String, String>,
    pub event: EventId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionaryRelation {
    pub id: EvolutionId,
    #[serde(rename = "src")]
    pub source: EntityId,
    #[serde(rename = "dst")]
    pub destination: EntityId,
    #[serde(rename = "rel")]
    pub relation: String,
    #[serde(rename = "ts")]
    pub timestamp: NaiveDate,
    #[serde(rename = "attrs")]
    pub attributes: BTreeMap<String, String>,
    #[serde(rename = "event")]
    pub provenance: EventId,
}

impl EvolutionaryRelation {
    pub fn quintuple(&self) -> Quintuple {
        Quintuple {
            source: self.source,
            destination: self.destination,
            relation: self.relation.clone(),
            timestamp: self.timestamp,
            attributes: self.attributes.clone(),
            event: self.provenance,
        }
    }
}
