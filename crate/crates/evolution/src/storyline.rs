//! Time-ordered events of one stakeholder, optionally narrowed to a feature.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use msem_core::{Component, EntityId, Event, EventId, Layer, Model, NodeRef, StructuralKind};
use serde::{Deserialize, Serialize};

use crate::error::EvolutionError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    /// The feature and its direct Equivalence/Inclusion neighbors.
    #[default]
    OneHop,
    /// Everything reachable over Equivalence/Inclusion edges.
    Transitive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorylineEntry {
    pub timestamp: NaiveDate,
    pub event: EventId,
    pub relation: String,
    pub counterpart: Option<EntityId>,
    pub title: String,
}

fn expect_layer(model: &Model, id: EntityId, layer: Layer) -> Result<(), EvolutionError> {
    let e = model.entity(id).ok_or(EvolutionError::UnknownEntity(id))?;
    if e.layer() != layer {
        return Err(EvolutionError::WrongLayer { entity: id, expected: layer });
    }
    Ok(())
}

/// `feature` plus its Equivalence/Inclusion neighborhood in either direction.
pub fn feature_closure(model: &Model, feature: EntityId, closure: Closure) -> BTreeSet<EntityId> {
    let mut links: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for s in model.structural() {
        if let (StructuralKind::Equivalence | StructuralKind::Inclusion, NodeRef::Entity(a), NodeRef::Entity(b)) =
            (s.kind, s.src, s.dst)
        {
            links.entry(a).or_default().push(b);
            links.entry(b).or_default().push(a);
        }
    }
    let mut seen = BTreeSet::from([feature]);
    let mut frontier = vec![feature];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for f in frontier {
            for &g in links.get(&f).into_iter().flatten() {
                if seen.insert(g) {
                    next.push(g);
                }
            }
        }
        if closure == Closure::OneHop {
            break;
        }
        frontier = next;
    }
    seen
}

fn describe(model: &Model, ev: &Event, stakeholder: EntityId) -> (String, Option<EntityId>) {
    let edge = model
        .evolutionary()
        .iter()
        .find(|e| e.provenance == ev.id && (e.source == stakeholder || e.destination == stakeholder));
    if let Some(e) = edge {
        let other = if e.source == stakeholder { e.destination } else { e.source };
        return (e.relation.clone(), Some(other));
    }
    let counterpart = [Component::Object, Component::Recipient, Component::Actor]
        .into_iter()
        .filter_map(|c| ev.mention(c).and_then(|m| m.entity))
        .find(|&id| id != stakeholder);
    (ev.action.clone(), counterpart)
}

fn title(ev: &Event) -> String {
    ev.title.clone().unwrap_or_else(|| {
        [ev.component_text(Component::Actor), Some(ev.action.clone()), ev.component_text(Component::Recipient), ev.component_text(Component::Object)]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(" ")
    })
}

pub fn storyline(model: &Model, stakeholder: EntityId, feature: Option<EntityId>) -> Result<Vec<StorylineEntry>, EvolutionError> {
    storyline_with(model, stakeholder, feature, Closure::OneHop)
}

/// Events with the stakeholder as actor or recipient, ordered by time then
/// event id. With a feature, only events whose object lies in its closure.
pub fn storyline_with(
    model: &Model,
    stakeholder: EntityId,
    feature: Option<EntityId>,
    closure: Closure,
) -> Result<Vec<StorylineEntry>, EvolutionError> {
    expect_layer(model, stakeholder, Layer::Stakeholder)?;
    let features = match feature {
        Some(f) => {
            expect_layer(model, f, Layer::ServiceFeature)?;
            Some(feature_closure(model, f, closure))
        }
        None => None,
    };
    let mut involved = BTreeSet::new();
    let mut objects: BTreeMap<EventId, Vec<EntityId>> = BTreeMap::new();
    for s in model.structural() {
        let (NodeRef::Event(ev), NodeRef::Entity(en)) = (s.src, s.dst) else { continue };
        match s.kind {
            StructuralKind::HasActor | StructuralKind::HasRecipient if en == stakeholder => {
                involved.insert(ev);
            }
            StructuralKind::HasObject => objects.entry(ev).or_default().push(en),
            _ => {}
        }
    }
    let mut entries: Vec<StorylineEntry> = involved
        .into_iter()
        .filter(|ev| match &features {
            Some(fs) => objects.get(ev).is_some_and(|os| os.iter().any(|o| fs.contains(o))),
            None => true,
        })
        .filter_map(|id| model.event(id))
        .map(|ev| {
            let (relation, counterpart) = describe(model, ev, stakeholder);
            StorylineEntry { timestamp: ev.time, event: ev.id, relation, counterpart, title: title(ev) }
        })
        .collect();
    entries.sort_by_key(|e| (e.timestamp, e.event));
    Ok(entries)
}

/// One line per entry: date, relation, counterpart name, title.
pub fn render_timeline(model: &Model, entries: &[StorylineEntry]) -> String {
    entries
        .iter()
        .map(|e| {
            let other = e
                .counterpart
                .and_then(|id| model.entity(id))
                .map_or("-", |en| en.canonical_name.as_str());
            format!("{}  {:<12} {:<24} {}\n", e.timestamp, e.relation, other, e.title)
        })
        .collect()
}
