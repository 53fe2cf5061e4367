//! Linking event-component mentions to structural entities.

use std::collections::BTreeMap;

use msem_core::{Component, EntityId, EntityKind, EventId, Layer, Model};
use serde::{Deserialize, Serialize};

use crate::alias::{pick, AliasIndex};
use crate::classify::{Classifier, Target};
use crate::error::ConstructError;
use crate::external::KgClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    DirectMatch,
    AliasMatch,
    ExternalLookup,
    Created,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkResult {
    pub outcome: Outcome,
    pub entity: EntityId,
    /// Set when the external lookup failed in transport and the cascade fell
    /// through to creation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Layer a role's entity must live in.
pub fn role_layer(role: Component) -> Option<Layer> {
    match role {
        Component::Actor | Component::Recipient => Some(Layer::Stakeholder),
        Component::Object => Some(Layer::ServiceFeature),
        _ => None,
    }
}

/// Kind given to mentions that resolve nowhere.
pub fn default_kind(role: Component) -> Option<EntityKind> {
    match role {
        Component::Actor | Component::Recipient => Some(EntityKind::Organization),
        Component::Object => Some(EntityKind::FunctionalFeature),
        _ => None,
    }
}

/// Shared state of the cascade: the alias index over the model, the
/// external source, and optional classifier rules used as kind hints.
pub struct Fuser<'a> {
    pub index: AliasIndex,
    pub client: &'a dyn KgClient,
    pub hints: Option<&'a Classifier>,
}

impl<'a> Fuser<'a> {
    pub fn new(model: &Model, client: &'a dyn KgClient) -> Self {
        Fuser {
            index: AliasIndex::build(model),
            client,
            hints: None,
        }
    }

    pub fn with_hints(mut self, hints: &'a Classifier) -> Self {
        self.hints = Some(hints);
        self
    }

    fn kind_for(&self, surface: &str, role: Component, hint: Option<EntityKind>, layer: Layer) -> EntityKind {
        let ruled = self.hints.and_then(|c| match c.classify::<&str>(surface, &[]) {
            Target::Kind(k) => Some(k),
            Target::Discard => None,
        });
        hint.into_iter()
            .chain(ruled)
            .find(|k| k.layer() == layer)
            .or_else(|| default_kind(role))
            .expect("role has a layer")
    }

    /// Direct canonical match, then alias, then external lookup, then a new
    /// entity. Only entities in the role's layer are candidates.
    pub fn resolve(&mut self, model: &mut Model, surface: &str, role: Component) -> Result<LinkResult, ConstructError> {
        let layer = role_layer(role).ok_or_else(|| msem_core::CoreError::InvalidComponent(role.to_string()))?;
        let surface = surface.trim();
        if surface.is_empty() {
            return Err(msem_core::CoreError::EmptyName.into());
        }
        if let Some(entity) = pick(model, self.index.by_name(surface), Some(layer)) {
            return Ok(LinkResult { outcome: Outcome::DirectMatch, entity, warning: None });
        }
        if let Some(entity) = pick(model, self.index.by_alias(surface), Some(layer)) {
            return Ok(LinkResult { outcome: Outcome::AliasMatch, entity, warning: None });
        }
        let mut warning = None;
        match self.client.lookup(surface) {
            Ok(Some(rec)) => {
                let existing = pick(
                    model,
                    std::iter::once(&rec.canonical)
                        .chain(&rec.aliases)
                        .flat_map(|s| self.index.lookup(s)),
                    Some(layer),
                );
                let (kind, name) = match existing.and_then(|id| model.entity(id)) {
                    Some(e) => (e.kind, e.canonical_name.clone()),
                    None => (self.kind_for(&rec.canonical, role, rec.kind, layer), rec.canonical.clone()),
                };
                let aliases = rec.aliases.iter().cloned().chain(std::iter::once(surface.to_string()));
                let entity = model.upsert_entity(kind, &name, aliases, BTreeMap::new())?;
                self.index.add(model, entity);
                return Ok(LinkResult { outcome: Outcome::ExternalLookup, entity, warning: None });
            }
            Ok(None) => {}
            Err(e) => warning = Some(e.to_string()),
        }
        let kind = self.kind_for(surface, role, None, layer);
        let entity = model.upsert_entity(kind, surface, Vec::<String>::new(), BTreeMap::new())?;
        self.index.add(model, entity);
        Ok(LinkResult { outcome: Outcome::Created, entity, warning })
    }

    /// Resolves and binds every present, still unbound actor, recipient and
    /// object mention of the event.
    pub fn fuse_event(&mut self, model: &mut Model, event: EventId) -> Result<Vec<(Component, LinkResult)>, ConstructError> {
        let ev = model.event(event).ok_or(msem_core::CoreError::UnknownEvent(event))?;
        let todo: Vec<(Component, String)> = [Component::Actor, Component::Recipient, Component::Object]
            .into_iter()
            .filter_map(|c| ev.mention(c).filter(|m| m.entity.is_none()).map(|m| (c, m.text.clone())))
            .collect();
        let mut out = Vec::with_capacity(todo.len());
        for (role, text) in todo {
            let link = self.resolve(model, &text, role)?;
            model.bind_mention(event, role, link.entity)?;
            out.push((role, link));
        }
        Ok(out)
    }

    pub fn fuse_all(&mut self, model: &mut Model) -> Result<FusionReport, ConstructError> {
        let mut report = FusionReport::default();
        for i in 0..model.events().len() {
            for (_, link) in self.fuse_event(model, EventId(i as u32))? {
                *report.outcomes.entry(link.outcome).or_default() += 1;
                if let Some(w) = link.warning {
                    report.warnings.push(w);
                }
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionReport {
    pub outcomes: BTreeMap<Outcome, usize>,
    pub warnings: Vec<String>,
}

impl FusionReport {
    pub fn count(&self, o: Outcome) -> usize {
        self.outcomes.get(&o).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::external::{FileKgClient, KgRecord, OfflineKgClient};
    use chrono::NaiveDate;
    use msem_core::{EventDraft, StructuralKind};

    fn base() -> Model {
        let mut m = Model::new();
        m.upsert_entity(EntityKind::Organization, "Alibaba Group Holding LTD", ["Ali", "Alibaba"], BTreeMap::new())
            .unwrap();
        m.upsert_entity(EntityKind::Service, "Alipay", Vec::<String>::new(), BTreeMap::new()).unwrap();
        m
    }

    #[test]
    fn cascade_stages() {
        let mut m = base();
        let kg = FileKgClient::new(vec![KgRecord {
            canonical: "Tencent Holdings".into(),
            kind: Some(EntityKind::Organization),
            aliases: vec!["Tencent".into()],
        }]);
        let mut f = Fuser::new(&m, &kg);
        let r = f.resolve(&mut m, "Ali", Component::Actor).unwrap();
        assert_eq!((r.outcome, r.entity), (Outcome::AliasMatch, EntityId(0)));
        let r = f.resolve(&mut m, "alibaba group  holding ltd", Component::Recipient).unwrap();
        assert_eq!(r.outcome, Outcome::DirectMatch);
        let r = f.resolve(&mut m, "Tencent", Component::Actor).unwrap();
        assert_eq!(r.outcome, Outcome::ExternalLookup);
        assert_eq!(m.entity(r.entity).unwrap().canonical_name, "Tencent Holdings");
        let r = f.resolve(&mut m, "Tencent Meeting", Component::Object).unwrap();
        assert_eq!(r.outcome, Outcome::Created);
        assert_eq!(m.entity(r.entity).unwrap().kind, EntityKind::FunctionalFeature);
        let again = f.resolve(&mut m, "Tencent Meeting", Component::Object).unwrap();
        assert_eq!(again.entity, r.entity);
        // a stakeholder named like a service is not a candidate for an object
        let r = f.resolve(&mut m, "Ali", Component::Object).unwrap();
        assert_eq!(r.outcome, Outcome::Created);
    }

    #[test]
    fn transport_failure_creates_with_warning() {
        let mut m = base();
        let mut f = Fuser::new(&m, &OfflineKgClient);
        let r = f.resolve(&mut m, "Hooli", Component::Actor).unwrap();
        assert_eq!(r.outcome, Outcome::Created);
        assert!(r.warning.is_some());
        assert_eq!(m.entity(r.entity).unwrap().kind, EntityKind::Organization);
    }

    #[test]
    fn fusing_an_event_is_idempotent() {
        let mut m = base();
        let day = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        let e = m
            .record_event(EventDraft::new("d1", "launches").actor("Ali").object("Alipay").at(day))
            .unwrap();
        let kg = FileKgClient::default();
        let mut f = Fuser::new(&m, &kg);
        assert_eq!(f.fuse_event(&mut m, e).unwrap().len(), 2);
        let edges = m.structural().len();
        assert_eq!(edges, 2);
        assert!(f.fuse_event(&mut m, e).unwrap().is_empty());
        assert_eq!(m.structural().len(), edges);
        assert!(m.has_structural(e.into(), EntityId(0).into(), StructuralKind::HasActor));
    }
}
