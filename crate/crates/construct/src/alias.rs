//! Normalized surface-form index over canonical names and aliases.

use std::collections::{BTreeMap, BTreeSet};

use msem_core::text::normalize;
use msem_core::{EntityId, Layer, Model};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasIndex {
    names: BTreeMap<String, BTreeSet<EntityId>>,
    aliases: BTreeMap<String, BTreeSet<EntityId>>,
}

impl AliasIndex {
    pub fn build(model: &Model) -> Self {
        let mut idx = AliasIndex::default();
        for e in model.entities() {
            idx.add(model, e.id);
        }
        idx
    }

    /// Indexes (or re-indexes) one entity's name and aliases.
    pub fn add(&mut self, model: &Model, id: EntityId) {
        let Some(e) = model.entity(id) else { return };
        self.names.entry(normalize(&e.canonical_name)).or_default().insert(id);
        for a in &e.aliases {
            self.aliases.entry(normalize(a)).or_default().insert(id);
        }
    }

    pub fn by_name(&self, surface: &str) -> impl Iterator<Item = EntityId> + '_ {
        self.names.get(&normalize(surface)).into_iter().flatten().copied()
    }

    pub fn by_alias(&self, surface: &str) -> impl Iterator<Item = EntityId> + '_ {
        self.aliases.get(&normalize(surface)).into_iter().flatten().copied()
    }

    /// Canonical-name or alias hits.
    pub fn lookup(&self, surface: &str) -> BTreeSet<EntityId> {
        self.by_name(surface).chain(self.by_alias(surface)).collect()
    }

    pub fn len(&self) -> usize {
        self.names.len() + self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty() && self.aliases.is_empty()
    }
}

/// Among candidates in `layer` (any layer when `None`), the one with the most
/// aliases, then the smallest id.
pub fn pick(model: &Model, candidates: impl IntoIterator<Item = EntityId>, layer: Option<Layer>) -> Option<EntityId> {
    candidates
        .into_iter()
        .filter_map(|id| model.entity(id))
        .filter(|e| layer.is_none_or(|l| e.layer() == l))
        .min_by_key(|e| (std::cmp::Reverse(e.aliases.len()), e.id))
        .map(|e| e.id)
}
