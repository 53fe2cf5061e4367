//! Regex rules that map knowledge-graph entity names to model kinds.

use std::fmt;
use std::str::FromStr;

use msem_core::EntityKind;
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ConstructError;

/// Outcome of classification: a model kind, or not service-related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Kind(EntityKind),
    Discard,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Kind(k) => k.fmt(f),
            Target::Discard => f.write_str("DISCARD"),
        }
    }
}

impl FromStr for Target {
    type Err = ConstructError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("discard") {
            return Ok(Target::Discard);
        }
        s.parse().map(Target::Kind).map_err(ConstructError::from)
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    /// Matched against the entity name.
    pub pattern: String,
    /// When present, at least one of the entity's predicates must match too.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    pub target: Target,
    pub priority: i64,
}

#[derive(Debug, Clone)]
struct Compiled {
    spec: RuleSpec,
    name: Regex,
    predicate: Option<Regex>,
}

/// Rules sorted by ascending priority; the first match wins.
#[derive(Debug, Clone)]
pub struct Classifier {
    rules: Vec<Compiled>,
}

fn compile(p: &str) -> Result<Regex, ConstructError> {
    Regex::new(p).map_err(|e| ConstructError::Pattern {
        pattern: p.to_string(),
        message: e.to_string(),
    })
}

impl Classifier {
    pub fn new(specs: Vec<RuleSpec>) -> Result<Self, ConstructError> {
        if specs.is_empty() {
            return Err(ConstructError::EmptyRulebase);
        }
        let mut rules = specs
            .into_iter()
            .map(|spec| {
                Ok(Compiled {
                    name: compile(&spec.pattern)?,
                    predicate: spec.predicate.as_deref().map(compile).transpose()?,
                    spec,
                })
            })
            .collect::<Result<Vec<_>, ConstructError>>()?;
        rules.sort_by_key(|r| r.spec.priority);
        if let Some(w) = rules.windows(2).find(|w| w[0].spec.priority == w[1].spec.priority) {
            return Err(ConstructError::DuplicatePriority(w[0].spec.priority));
        }
        Ok(Classifier { rules })
    }

    pub fn from_json(text: &str) -> Result<Self, ConstructError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn specs(&self) -> impl Iterator<Item = &RuleSpec> {
        self.rules.iter().map(|r| &r.spec)
    }

    pub fn classify<P: AsRef<str>>(&self, name: &str, predicates: &[P]) -> Target {
        self.rules
            .iter()
            .find(|r| {
                r.name.is_match(name)
                    && r.predicate
                        .as_ref()
                        .is_none_or(|p| predicates.iter().any(|q| p.is_match(q.as_ref())))
            })
            .map_or(Target::Discard, |r| r.spec.target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(pattern: &str, target: &str, priority: i64) -> RuleSpec {
        RuleSpec {
            pattern: pattern.into(),
            predicate: None,
            target: target.parse().unwrap(),
            priority,
        }
    }

    #[test]
    fn documented_cases() {
        let c = Classifier::new(vec![rule(r"Inc\.$", "Organization", 1)]).unwrap();
        assert_eq!(c.classify::<&str>("Acme Inc.", &[]), Target::Kind(EntityKind::Organization));
        assert_eq!(c.classify::<&str>("Mount Everest", &[]), Target::Discard);
        let c = Classifier::new(vec![rule("Pay", "Service", 2), rule("^Ali", "Organization", 1)]).unwrap();
        assert_eq!(c.classify::<&str>("AliPay", &[]), Target::Kind(EntityKind::Organization));
    }

    #[test]
    fn predicate_context_and_discard_rules() {
        let mut r = rule(".*", "Domain", 5);
        r.predicate = Some("^industry_of$".into());
        let c = Classifier::new(vec![r, rule("^Mount ", "discard", 1)]).unwrap();
        assert_eq!(c.classify("finance", &["industry_of"]), Target::Kind(EntityKind::Domain));
        assert_eq!(c.classify("finance", &["located_in"]), Target::Discard);
        assert_eq!(c.classify("Mount Tai", &["industry_of"]), Target::Discard);
    }

    #[test]
    fn bad_rulebases_are_rejected() {
        assert!(Classifier::new(vec![]).is_err());
        assert!(Classifier::new(vec![rule("(", "Service", 1)]).is_err());
        assert!(Classifier::new(vec![rule("a", "Service", 1), rule("b", "Domain", 1)]).is_err());
        assert!(Classifier::from_json(r#"[{"pattern":"x","target":"Planet","priority":1}]"#).is_err());
        let c = Classifier::from_json(r#"[{"pattern":"x","target":"DISCARD","priority":1}]"#).unwrap();
        assert_eq!(c.specs().count(), 1);
    }
}
