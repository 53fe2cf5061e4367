//! Trigger-word rules that turn events into evolutionary relations.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use msem_core::text::normalize;
use msem_core::{Component, EntityId, Event, EventId, Model, Quintuple};
use msem_extract::tokenize;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ConstructError;

/// What a template slot is filled from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slot {
    Component(Component),
    Constant(String),
    Null,
}

impl Serialize for Slot {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Slot::Component(c) => s.serialize_str(c.as_str()),
            Slot::Constant(v) if v.parse::<Component>().is_ok() => {
                let mut m = BTreeMap::new();
                m.insert("const", v);
                m.serialize(s)
            }
            Slot::Constant(v) => s.serialize_str(v),
            Slot::Null => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Const { #[serde(rename = "const")] value: String },
        }
        Ok(match Option::<Raw>::deserialize(d)? {
            None => Slot::Null,
            Some(Raw::Text(t)) => t.parse().map(Slot::Component).unwrap_or(Slot::Constant(t)),
            Some(Raw::Const { value }) => Slot::Constant(value),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTemplate {
    pub src: Slot,
    pub dst: Slot,
    pub rel: Slot,
    pub ts: Slot,
    #[serde(default)]
    pub attrs: BTreeMap<String, Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub twords: Vec<String>,
    pub components: Vec<Component>,
    pub edges: Vec<EdgeTemplate>,
}

const ENDPOINTS: [Component; 3] = [Component::Actor, Component::Recipient, Component::Object];

impl Rule {
    fn invalid(&self, message: impl Into<String>) -> ConstructError {
        ConstructError::InvalidRule {
            rule: self.id.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConstructError> {
        if self.twords.iter().all(|w| w.trim().is_empty()) {
            return Err(self.invalid("no trigger words"));
        }
        let listed: BTreeSet<Component> = self.components.iter().copied().collect();
        for (i, e) in self.edges.iter().enumerate() {
            let all = [&e.src, &e.dst, &e.rel, &e.ts].into_iter().chain(e.attrs.values());
            for slot in all {
                if let Slot::Component(c) = slot {
                    if !listed.contains(c) {
                        return Err(self.invalid(format!("edge {i} uses {c}, which the rule does not list")));
                    }
                }
            }
            for (name, slot) in [("src", &e.src), ("dst", &e.dst)] {
                if let Slot::Component(c) = slot {
                    if !ENDPOINTS.contains(c) {
                        return Err(self.invalid(format!("edge {i} {name} must be an entity component, not {c}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn triggers(&self) -> Vec<Vec<String>> {
        self.twords
            .iter()
            .map(|w| tokenize(w).iter().map(|t| normalize(t)).collect::<Vec<_>>())
            .filter(|t| !t.is_empty())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rulebase {
    rules: Vec<Rule>,
    triggers: Vec<Vec<Vec<String>>>,
}

impl Rulebase {
    pub fn new(rules: Vec<Rule>) -> Result<Self, ConstructError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            r.validate()?;
            if !seen.insert(r.id.clone()) {
                return Err(r.invalid("duplicate rule id"));
            }
        }
        let triggers = rules.iter().map(Rule::triggers).collect();
        Ok(Rulebase { rules, triggers })
    }

    pub fn from_json(text: &str) -> Result<Self, ConstructError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    fn matching_in(&self, event: &Event, text: &[String]) -> Vec<&Rule> {
        self.rules
            .iter()
            .zip(&self.triggers)
            .filter(|(rule, trig)| {
                trig.iter().any(|t| text.windows(t.len()).any(|w| w == t.as_slice()))
                    && rule.components.iter().all(|&c| event.has_component(c))
            })
            .map(|(r, _)| r)
            .collect()
    }

    /// Rules whose trigger occurs as whole tokens in the action text and
    /// whose required components are present. Only when the action text
    /// matches nothing is the full title searched instead.
    pub fn match_rules(&self, event: &Event) -> Vec<&Rule> {
        let toks = |s: &str| tokenize(s).iter().map(|t| normalize(t)).collect::<Vec<_>>();
        let by_action = self.matching_in(event, &toks(&event.action));
        if !by_action.is_empty() {
            return by_action;
        }
        event.title.as_deref().map(|t| self.matching_in(event, &toks(t))).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedEdge {
    pub event: EventId,
    pub rule: String,
    pub edge: usize,
    pub reason: String,
}

fn text_of(event: &Event, slot: &Slot) -> Option<String> {
    match slot {
        Slot::Component(c) => event.component_text(*c),
        Slot::Constant(v) => Some(v.clone()),
        Slot::Null => None,
    }
}

fn endpoint(model: &Model, event: &Event, slot: &Slot) -> Result<EntityId, String> {
    match slot {
        Slot::Component(c) => event
            .mention(*c)
            .ok_or_else(|| format!("{c} is absent"))?
            .entity
            .ok_or_else(|| format!("{c} is not linked to an entity")),
        Slot::Constant(name) => model
            .entities()
            .iter()
            .find(|e| normalize(&e.canonical_name) == normalize(name))
            .map(|e| e.id)
            .ok_or_else(|| format!("no entity named `{name}`")),
        Slot::Null => Err("endpoint slot is null".into()),
    }
}

fn timestamp(event: &Event, slot: &Slot) -> Result<NaiveDate, String> {
    match slot {
        Slot::Component(Component::Time) => Ok(event.time),
        Slot::Constant(v) => {
            let t: NaiveDate = v.parse().map_err(|_| format!("timestamp constant `{v}` is not a date"))?;
            if t == event.time {
                Ok(t)
            } else {
                Err(format!("timestamp constant {t} differs from the event time {}", event.time))
            }
        }
        Slot::Component(c) => Err(format!("timestamp bound to {c}")),
        Slot::Null => Err("timestamp slot is null".into()),
    }
}

/// One quintuple per edge template; templates with an unresolvable required
/// slot are reported and skipped.
pub fn instantiate(model: &Model, event: &Event, rule: &Rule) -> (Vec<Quintuple>, Vec<SkippedEdge>) {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (i, e) in rule.edges.iter().enumerate() {
        let built = (|| {
            let source = endpoint(model, event, &e.src)?;
            let destination = endpoint(model, event, &e.dst)?;
            let relation = text_of(event, &e.rel)
                .filter(|r| !r.trim().is_empty())
                .ok_or("relation slot resolves to nothing")?;
            let ts = timestamp(event, &e.ts)?;
            let attributes = e
                .attrs
                .iter()
                .filter_map(|(k, s)| text_of(event, s).map(|v| (k.clone(), v)))
                .collect();
            Ok::<_, String>(Quintuple {
                source,
                destination,
                relation,
                timestamp: ts,
                attributes,
                event: event.id,
            })
        })();
        match built {
            Ok(q) => out.push(q),
            Err(reason) => skipped.push(SkippedEdge {
                event: event.id,
                rule: rule.id.clone(),
                edge: i,
                reason,
            }),
        }
    }
    (out, skipped)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub matched: usize,
    pub total: usize,
    #[serde(rename = "byRule")]
    pub by_rule: BTreeMap<String, usize>,
}

impl Coverage {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleReport {
    pub coverage: Coverage,
    /// Distinct quintuples emitted, in event then rule order.
    pub quintuples: Vec<Quintuple>,
    pub skipped: Vec<SkippedEdge>,
    pub unmatched: Vec<EventId>,
}

/// Matches every event, instantiates all matching rules and returns the
/// deduplicated quintuples without touching the model.
pub fn evaluate_rules(model: &Model, rulebase: &Rulebase) -> RuleReport {
    let mut report = RuleReport {
        coverage: Coverage {
            total: model.events().len(),
            by_rule: rulebase.rules().iter().map(|r| (r.id.clone(), 0)).collect(),
            ..Coverage::default()
        },
        ..RuleReport::default()
    };
    let mut seen = BTreeSet::new();
    for event in model.events() {
        let rules = rulebase.match_rules(event);
        if rules.is_empty() {
            report.unmatched.push(event.id);
            continue;
        }
        report.coverage.matched += 1;
        for rule in rules {
            *report.coverage.by_rule.entry(rule.id.clone()).or_default() += 1;
            let (qs, skipped) = instantiate(model, event, rule);
            report.skipped.extend(skipped);
            report.quintuples.extend(qs.into_iter().filter(|q| seen.insert(q.clone())));
        }
    }
    report
}

/// [`evaluate_rules`] followed by writing the quintuples into the model.
pub fn apply_rules(model: &mut Model, rulebase: &Rulebase) -> Result<RuleReport, ConstructError> {
    let report = evaluate_rules(model, rulebase);
    for q in &report.quintuples {
        model.apply_evolution(q.clone())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use msem_core::{EntityKind, EventDraft};

    fn rule_json() -> &'static str {
        r#"[
          {"id":"launch","twords":["launches","releases"],"components":["Actor","Action","Object","Time"],
           "edges":[{"src":"Actor","dst":"Object","rel":"offer","ts":"Time","attrs":{}}]},
          {"id":"close","twords":["closed","shuts down"],"components":["Actor","Action","Object","Time"],
           "edges":[{"src":"Actor","dst":"Object","rel":"close","ts":"Time","attrs":{"how":"Action"}},
                    {"src":"Actor","dst":"Object","rel":"offer","ts":"Time","attrs":{"status":"ended"}}]}
        ]"#
    }

    fn fused(model: &mut Model, doc: &str, action: &str, actor: &str, object: Option<&str>, day: &str) -> EventId {
        let mut d = EventDraft::new(doc, action).actor(actor).at(day.parse().unwrap());
        if let Some(o) = object {
            d = d.object(o);
        }
        let e = model.record_event(d.title(format!("{actor} {action} {}", object.unwrap_or("")))).unwrap();
        let a = model.upsert_entity(EntityKind::Organization, actor, Vec::<String>::new(), BTreeMap::new()).unwrap();
        model.bind_mention(e, Component::Actor, a).unwrap();
        if let Some(o) = object {
            let f = model.upsert_entity(EntityKind::FunctionalFeature, o, Vec::<String>::new(), BTreeMap::new()).unwrap();
            model.bind_mention(e, Component::Object, f).unwrap();
        }
        e
    }

    #[test]
    fn documented_matching_and_instantiation() {
        let rb = Rulebase::from_json(rule_json()).unwrap();
        let mut m = Model::new();
        let e1 = fused(&mut m, "d1", "launches", "Google", Some("search engine"), "2020-05-01");
        let e2 = fused(&mut m, "d2", "launches", "Google", None, "2020-05-02");
        let e3 = fused(&mut m, "d3", "closed", "Google", Some("social network service"), "2019-04-02");
        let e4 = fused(&mut m, "d4", "acquires", "Google", Some("Fitbit"), "2019-11-01");
        let ids = |e: EventId| rb.match_rules(m.event(e).unwrap()).iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(e1), vec!["launch"]);
        assert!(ids(e2).is_empty());
        assert_eq!(ids(e3), vec!["close"]);
        assert!(ids(e4).is_empty());
        let ev = m.event(e3).unwrap();
        let (qs, skipped) = instantiate(&m, ev, &rb.rules()[1]);
        assert!(skipped.is_empty());
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].relation, "close");
        assert_eq!(qs[0].timestamp.to_string(), "2019-04-02");
        assert_eq!(qs[0].attributes["how"], "closed");
        assert_eq!(m.entity(qs[0].destination).unwrap().canonical_name, "social network service");
        let report = apply_rules(&mut m, &rb).unwrap();
        assert_eq!((report.coverage.matched, report.coverage.total), (2, 4));
        assert_eq!(report.coverage.by_rule["close"], 1);
        assert_eq!(report.unmatched, vec![e2, e4]);
        assert_eq!(m.evolutionary().len(), 3);
        apply_rules(&mut m, &rb).unwrap();
        assert_eq!(m.evolutionary().len(), 3);
    }

    #[test]
    fn multiword_trigger_needs_whole_tokens() {
        let rb = Rulebase::from_json(rule_json()).unwrap();
        let mut m = Model::new();
        let e = fused(&mut m, "d1", "shuts down", "Acme", Some("BikeShare"), "2020-01-01");
        let f = fused(&mut m, "d2", "launchesX", "Acme", Some("BikeShare"), "2020-01-01");
        assert_eq!(rb.match_rules(m.event(e).unwrap()).len(), 1);
        assert!(rb.match_rules(m.event(f).unwrap()).is_empty());
    }

    #[test]
    fn title_is_searched_only_when_the_action_matches_nothing() {
        let rb = Rulebase::from_json(rule_json()).unwrap();
        let mut m = Model::new();
        let day = "2020-01-01".parse().unwrap();
        let draft = |action: &str| {
            EventDraft::new("d", action)
                .actor("A")
                .object("B")
                .at(day)
                .title("A closed B. Then A releases B.")
        };
        let e = m.record_event(draft("reshaped")).unwrap();
        let f = m.record_event(draft("releases")).unwrap();
        let ids = |e: EventId| rb.match_rules(m.event(e).unwrap()).iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(e), vec!["launch", "close"]);
        assert_eq!(ids(f), vec!["launch"]);
    }

    #[test]
    fn unresolved_endpoint_is_skipped_with_reason() {
        let rb = Rulebase::from_json(rule_json()).unwrap();
        let mut m = Model::new();
        let e = m
            .record_event(EventDraft::new("d", "launches").actor("X").object("Y").at("2020-01-01".parse().unwrap()))
            .unwrap();
        let (qs, skipped) = instantiate(&m, m.event(e).unwrap(), &rb.rules()[0]);
        assert!(qs.is_empty());
        assert!(skipped[0].reason.contains("not linked"));
    }

    #[test]
    fn invalid_rules_rejected() {
        let bad = [
            r#"[{"id":"a","twords":[],"components":["Actor"],"edges":[]}]"#,
            r#"[{"id":"a","twords":["x"],"components":["Actor"],"edges":[{"src":"Actor","dst":"Object","rel":"r","ts":"Time"}]}]"#,
            r#"[{"id":"a","twords":["x"],"components":["Actor","Time"],"edges":[{"src":"Time","dst":"Actor","rel":"r","ts":"Time"}]}]"#,
            r#"[{"id":"a","twords":["x"],"components":[],"edges":[]},{"id":"a","twords":["y"],"components":[],"edges":[]}]"#,
        ];
        for b in bad {
            assert!(Rulebase::from_json(b).is_err(), "{b}");
        }
    }

    #[test]
    fn slot_serde_shapes() {
        let t: EdgeTemplate = serde_json::from_str(r#"{"src":"Actor","dst":{"const":"Actor"},"rel":"offer","ts":null}"#).unwrap();
        assert_eq!(t.src, Slot::Component(Component::Actor));
        assert_eq!(t.dst, Slot::Constant("Actor".into()));
        assert_eq!(t.rel, Slot::Constant("offer".into()));
        assert_eq!(t.ts, Slot::Null);
        let back: EdgeTemplate = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
