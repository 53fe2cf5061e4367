use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::NaiveDate;

use crate::entity::{Entity, EntityId, EntityKind, Layer};
use crate::error::CoreError;
use crate::event::{Component, Event, EventDraft, EventId, Mention};
use crate::relation::{
    EvolutionId, EvolutionaryRelation, NodeRef, Quintuple, StructuralId, StructuralKind,
    StructuralRelation,
};
use crate::snapshot::ModelSnapshot;

/// The layered temporal graph: entities, events, structural and evolutionary edges.
///
/// All mutation goes through `&mut self`; wrap in [`SharedModel`] for the
/// single-writer, multi-reader setting.
#[derive(Debug, Clone, Default)]
pub struct Model {
    entities: Vec<Entity>,
    entity_index: HashMap<(EntityKind, String), EntityId>,
    events: Vec<Event>,
    event_index: HashMap<String, EventId>,
    structural: Vec<StructuralRelation>,
    structural_index: HashSet<(NodeRef, NodeRef, StructuralKind)>,
    evolutionary: Vec<EvolutionaryRelation>,
    evolution_index: HashSet<Quintuple>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.events == other.events
            && self.structural == other.structural
            && self.evolutionary == other.evolutionary
    }
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn structural(&self) -> &[StructuralRelation] {
        &self.structural
    }

    pub fn evolutionary(&self) -> &[EvolutionaryRelation] {
        &self.evolutionary
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.0 as usize)
    }

    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events.get(id.0 as usize)
    }

    pub fn find_entity(&self, kind: EntityKind, name: &str) -> Option<EntityId> {
        self.entity_index.get(&(kind, name.trim().to_string())).copied()
    }

    /// Creates the entity, or merges aliases and attributes into the existing
    /// one with the same `(kind, canonical name)`.
    pub fn upsert_entity<A, S>(
        &mut self,
        kind: EntityKind,
        canonical_name: &str,
        aliases: A,
        attributes: BTreeMap<String, String>,
    ) -> Result<EntityId, CoreError>
    where
        A: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = canonical_name.trim();
        if name.is_empty() {
            return Err(CoreError::EmptyName);
        }
        let aliases = aliases
            .into_iter()
            .map(Into::into)
            .map(|a: String| a.trim().to_string())
            .filter(|a| !a.is_empty() && a != name);
        let key = (kind, name.to_string());
        if let Some(&id) = self.entity_index.get(&key) {
            let entity = &mut self.entities[id.0 as usize];
            entity.aliases.extend(aliases);
            entity.attributes.extend(attributes);
            return Ok(id);
        }
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(Entity {
            id,
            kind,
            canonical_name: name.to_string(),
            aliases: aliases.collect(),
            attributes,
        });
        self.entity_index.insert(key, id);
        Ok(id)
    }

    fn layer_of(&self, node: NodeRef) -> Result<Layer, CoreError> {
        match node {
            NodeRef::Entity(id) => self
                .entity(id)
                .map(Entity::layer)
                .ok_or(CoreError::UnknownEntity(id)),
            NodeRef::Event(id) => self
                .event(id)
                .map(|_| Layer::Event)
                .ok_or(CoreError::UnknownEvent(id)),
        }
    }

    fn check_layers(
        &self,
        src: NodeRef,
        dst: NodeRef,
        kind: StructuralKind,
    ) -> Result<(), CoreError> {
        let (ls, ld) = (self.layer_of(src)?, self.layer_of(dst)?);
        use Layer::*;
        let ok = match kind {
            StructuralKind::Equivalence | StructuralKind::Inclusion | StructuralKind::Overlap => {
                ls == ld && matches!(ls, ServiceFeature | Domain)
            }
            StructuralKind::HasActor | StructuralKind::HasRecipient => {
                ls == Event && ld == Stakeholder
            }
            StructuralKind::HasObject => ls == Event && ld == ServiceFeature,
            StructuralKind::BelongTo => matches!(ls, Stakeholder | ServiceFeature) && ld == Domain,
            StructuralKind::Sequential => ls == Event && ld == Event,
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::LayerViolation { kind, src, dst })
        }
    }

    fn find_structural(
        &self,
        src: NodeRef,
        dst: NodeRef,
        kind: StructuralKind,
    ) -> Option<StructuralId> {
        if !self.structural_index.contains(&(src, dst, kind))
            && !(kind == StructuralKind::Equivalence
                && self.structural_index.contains(&(dst, src, kind)))
        {
            return None;
        }
        self.structural
            .iter()
            .find(|e| e.kind == kind && e.connects(src, dst))
            .map(|e| e.id)
    }

    pub fn has_structural(&self, src: NodeRef, dst: NodeRef, kind: StructuralKind) -> bool {
        self.find_structural(src, dst, kind).is_some()
    }

    /// Nodes reachable from `from` along Inclusion edges.
    fn inclusion_reaches(&self, from: NodeRef, target: NodeRef) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(node) = stack.pop() {
            if node == target {
                return true;
            }
            if !seen.insert(node) {
                continue;
            }
            stack.extend(
                self.structural
                    .iter()
                    .filter(|e| e.kind == StructuralKind::Inclusion && e.src == node)
                    .map(|e| e.dst),
            );
        }
        false
    }

    pub fn add_structural(
        &mut self,
        src: impl Into<NodeRef>,
        dst: impl Into<NodeRef>,
        kind: StructuralKind,
    ) -> Result<StructuralId, CoreError> {
        let (src, dst) = (src.into(), dst.into());
        if src == dst {
            return Err(CoreError::SelfLoop(src));
        }
        self.check_layers(src, dst, kind)?;
        if let Some(id) = self.find_structural(src, dst, kind) {
            return Ok(id);
        }
        match (kind, src, dst) {
            (StructuralKind::Inclusion, NodeRef::Entity(s), NodeRef::Entity(d)) => {
                if self.inclusion_reaches(dst, src) {
                    return Err(CoreError::InclusionCycle { src: s, dst: d });
                }
            }
            // both exist: check_layers succeeded
            (StructuralKind::Sequential, NodeRef::Event(a), NodeRef::Event(b))
                if self.events[a.0 as usize].time > self.events[b.0 as usize].time =>
            {
                return Err(CoreError::TemporalOrder {
                    earlier: a,
                    later: b,
                });
            }
            _ => {}
        }
        Ok(self.push_structural(src, dst, kind))
    }

    fn push_structural(&mut self, src: NodeRef, dst: NodeRef, kind: StructuralKind) -> StructuralId {
        let id = StructuralId(self.structural.len() as u32);
        self.structural.push(StructuralRelation { id, src, dst, kind });
        self.structural_index.insert((src, dst, kind));
        id
    }

    pub fn add_sequential(
        &mut self,
        earlier: EventId,
        later: EventId,
    ) -> Result<StructuralId, CoreError> {
        self.add_structural(earlier, later, StructuralKind::Sequential)
    }

    /// Stores an event; replaying an identical draft returns the existing id.
    pub fn record_event(&mut self, draft: EventDraft) -> Result<EventId, CoreError> {
        let action = draft.action.trim();
        if action.is_empty() {
            return Err(CoreError::EmptyAction);
        }
        let key = draft.identity_key();
        if let Some(&id) = self.event_index.get(&key) {
            return Ok(id);
        }
        let (time, fallback) = match (draft.time, draft.published_at) {
            (Some(t), _) => (t, false),
            (None, Some(p)) => (p, true),
            (None, None) => return Err(CoreError::MissingTime),
        };
        let mention = |o: Option<String>| {
            o.map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .map(Mention::new)
        };
        let id = EventId(self.events.len() as u32);
        self.events.push(Event {
            id,
            actor: mention(draft.actor),
            action: action.to_string(),
            recipient: mention(draft.recipient),
            object: mention(draft.object),
            attribute: draft.attribute.filter(|a| !a.trim().is_empty()),
            time_text: draft.time_text,
            time,
            time_from_publication: fallback,
            source_doc: draft.source_doc,
            title: draft.title,
        });
        self.event_index.insert(key, id);
        Ok(id)
    }

    /// Records the resolved entity of an actor/recipient/object mention and
    /// adds the matching HasX edge.
    pub fn bind_mention(
        &mut self,
        event: EventId,
        component: Component,
        entity: EntityId,
    ) -> Result<Option<StructuralId>, CoreError> {
        let kind = match component {
            Component::Actor => StructuralKind::HasActor,
            Component::Recipient => StructuralKind::HasRecipient,
            Component::Object => StructuralKind::HasObject,
            other => return Err(CoreError::InvalidComponent(other.to_string())),
        };
        if self.event(event).is_none() {
            return Err(CoreError::UnknownEvent(event));
        }
        if self.events[event.0 as usize].mention(component).is_none() {
            return Ok(None);
        }
        let edge = self.add_structural(event, entity, kind)?;
        if let Some(m) = self.events[event.0 as usize].mention_mut(component) {
            m.entity = Some(entity);
        }
        Ok(Some(edge))
    }

    /// Appends an evolutionary edge. An identical quintuple with the same
    /// provenance is a no-op.
    pub fn apply_evolution(&mut self, q: Quintuple) -> Result<EvolutionId, CoreError> {
        for id in [q.source, q.destination] {
            if self.entity(id).is_none() {
                return Err(CoreError::UnknownEntity(id));
            }
        }
        let event = self.event(q.event).ok_or(CoreError::UnknownEvent(q.event))?;
        if event.time != q.timestamp {
            return Err(CoreError::TimestampMismatch {
                event: q.event,
                expected: event.time,
                got: q.timestamp,
            });
        }
        if self.evolution_index.contains(&q) {
            let found = self
                .evolutionary
                .iter()
                .find(|e| e.quintuple() == q)
                .map(|e| e.id);
            if let Some(id) = found {
                return Ok(id);
            }
        }
        let id = EvolutionId(self.evolutionary.len() as u32);
        self.evolutionary.push(EvolutionaryRelation {
            id,
            source: q.source,
            destination: q.destination,
            relation: q.relation.clone(),
            timestamp: q.timestamp,
            attributes: q.attributes.clone(),
            provenance: q.event,
        });
        self.evolution_index.insert(q);
        Ok(id)
    }

    pub fn snapshot_at(&self, at: NaiveDate) -> ModelSnapshot<'_> {
        ModelSnapshot {
            at,
            entities: &self.entities,
            structural: &self.structural,
            evolutionary: self
                .evolutionary
                .iter()
                .filter(|e| e.timestamp <= at)
                .collect(),
        }
    }

    /// Rebuilds a model from stored parts, re-validating every record.
    pub(crate) fn from_parts(
        entities: Vec<Entity>,
        events: Vec<Event>,
        structural: Vec<StructuralRelation>,
        evolutionary: Vec<EvolutionaryRelation>,
    ) -> Result<Self, CoreError> {
        let mut model = Model::new();
        for (i, e) in entities.into_iter().enumerate() {
            if e.id.0 as usize != i {
                return Err(CoreError::Parse {
                    offset: 0,
                    message: format!("entity ids must be dense and ordered, found {}", e.id),
                });
            }
            let key = (e.kind, e.canonical_name.clone());
            if e.canonical_name.trim().is_empty() {
                return Err(CoreError::EmptyName);
            }
            model.entity_index.insert(key, e.id);
            model.entities.push(e);
        }
        for (i, ev) in events.into_iter().enumerate() {
            if ev.id.0 as usize != i {
                return Err(CoreError::Parse {
                    offset: 0,
                    message: format!("event ids must be dense and ordered, found {}", ev.id),
                });
            }
            let key = draft_of(&ev).identity_key();
            model.event_index.insert(key, ev.id);
            model.events.push(ev);
        }
        for s in structural {
            model.check_layers(s.src, s.dst, s.kind)?;
            model.push_structural(s.src, s.dst, s.kind);
        }
        for e in evolutionary {
            model.apply_evolution(e.quintuple())?;
        }
        Ok(model)
    }
}

fn draft_of(ev: &Event) -> EventDraft {
    EventDraft {
        actor: ev.actor.as_ref().map(|m| m.text.clone()),
        action: ev.action.clone(),
        recipient: ev.recipient.as_ref().map(|m| m.text.clone()),
        object: ev.object.as_ref().map(|m| m.text.clone()),
        attribute: ev.attribute.clone(),
        time_text: ev.time_text.clone(),
        time: Some(ev.time),
        published_at: None,
        source_doc: ev.source_doc.clone(),
        title: ev.title.clone(),
    }
}

/// Single-writer, multi-reader handle around a [`Model`].
#[derive(Debug, Clone, Default)]
pub struct SharedModel(Arc<RwLock<Model>>);

impl SharedModel {
    pub fn new(model: Model) -> Self {
        SharedModel(Arc::new(RwLock::new(model)))
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Model> {
        self.0.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, Model> {
        self.0.write().unwrap_or_else(|p| p.into_inner())
    }
}
