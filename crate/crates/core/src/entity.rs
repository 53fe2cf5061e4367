use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Opaque identifier of an entity in the structural part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ent:{}", self.0)
    }
}

/// The four layers of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Event,
    Stakeholder,
    ServiceFeature,
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Organization,
    Channel,
    Executive,
    Service,
    FunctionalFeature,
    NonfunctionalFeature,
    Domain,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Organization,
        EntityKind::Channel,
        EntityKind::Executive,
        EntityKind::Service,
        EntityKind::FunctionalFeature,
        EntityKind::NonfunctionalFeature,
        EntityKind::Domain,
    ];

    pub fn layer(self) -> Layer {
        match self {
            EntityKind::Organization | EntityKind::Channel | EntityKind::Executive => {
                Layer::Stakeholder
            }
            EntityKind::Service
            | EntityKind::FunctionalFeature
            | EntityKind::NonfunctionalFeature => Layer::ServiceFeature,
            EntityKind::Domain => Layer::Domain,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Organization => "Organization",
            EntityKind::Channel => "Channel",
            EntityKind::Executive => "Executive",
            EntityKind::Service => "Service",
            EntityKind::FunctionalFeature => "FunctionalFeature",
            EntityKind::NonfunctionalFeature => "NonfunctionalFeature",
            EntityKind::Domain => "Domain",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CoreError::InvalidKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    #[serde(rename = "name")]
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
    pub attributes: BTreeMap<String, String>,
}

impl Entity {
    pub fn layer(&self) -> Layer {
        self.kind.layer()
    }
}
