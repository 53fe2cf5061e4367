//! Structural-part construction from generic knowledge-graph triples.

use std::collections::{BTreeMap, BTreeSet};

use msem_core::{CoreError, EntityId, EntityKind, Model, StructuralKind};
use serde::{Deserialize, Serialize};

use crate::classify::{Classifier, Target};
use crate::error::ConstructError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    #[serde(rename = "s")]
    pub subject: String,
    #[serde(rename = "p")]
    pub predicate: String,
    #[serde(rename = "o")]
    pub object: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl RawTriple {
    fn checked(mut self) -> Result<Self, String> {
        for part in [&mut self.subject, &mut self.predicate, &mut self.object] {
            *part = part.trim().to_string();
            if part.is_empty() {
                return Err("empty triple part".into());
            }
        }
        Ok(self)
    }

    /// `subject<TAB>predicate<TAB>object[<TAB>source]`.
    pub fn from_tsv(line: &str) -> Result<Self, String> {
        let parts: Vec<&str> = line.split('\t').collect();
        match parts.as_slice() {
            [s, p, o] | [s, p, o, _] => RawTriple {
                subject: s.to_string(),
                predicate: p.to_string(),
                object: o.to_string(),
                source: parts.get(3).map(|s| s.trim().to_string()).unwrap_or_default(),
            }
            .checked(),
            _ => Err(format!("expected 3 or 4 tab-separated fields, found {}", parts.len())),
        }
    }

    pub fn from_json(line: &str) -> Result<Self, String> {
        serde_json::from_str::<RawTriple>(line)
            .map_err(|e| e.to_string())?
            .checked()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Parses every non-blank line; malformed lines are collected, not fatal.
pub fn parse_triples(text: &str, format: TripleFormat) -> (Vec<RawTriple>, Vec<SkippedLine>) {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            TripleFormat::Tsv => RawTriple::from_tsv(line),
            TripleFormat::Jsonl => RawTriple::from_json(line),
        };
        match parsed {
            Ok(t) => ok.push(t),
            Err(reason) => skipped.push(SkippedLine { line: i + 1, reason }),
        }
    }
    (ok, skipped)
}

/// Predicate vocabulary that becomes structural edges; other predicates are
/// kept as attributes of the subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateMap(pub BTreeMap<String, StructuralKind>);

impl Default for PredicateMap {
    fn default() -> Self {
        PredicateMap(
            [
                ("equivalent_to", StructuralKind::Equivalence),
                ("includes", StructuralKind::Inclusion),
                ("subclass_of", StructuralKind::Inclusion),
                ("overlaps", StructuralKind::Overlap),
                ("belongs_to", StructuralKind::BelongTo),
                ("industry", StructuralKind::BelongTo),
            ]
            .into_iter()
            .map(|(p, k)| (p.to_string(), k))
            .collect(),
        )
    }
}

impl PredicateMap {
    pub fn get(&self, predicate: &str) -> Option<StructuralKind> {
        self.0.get(&predicate.trim().to_lowercase()).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedTriple {
    pub triple: RawTriple,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub processed: usize,
    pub skipped: Vec<SkippedLine>,
    pub discarded: usize,
    pub relations: usize,
    pub attributes: usize,
    /// Mapped predicates whose endpoints violate layer typing or acyclicity.
    pub rejected: Vec<RejectedTriple>,
}

impl IngestReport {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

fn attach_attribute(model: &mut Model, id: EntityId, key: &str, value: &str) -> Result<(), CoreError> {
    let e = model.entity(id).ok_or(CoreError::UnknownEntity(id))?;
    let merged = match e.attributes.get(key) {
        Some(old) if old.split("; ").any(|v| v == value) => return Ok(()),
        Some(old) => format!("{old}; {value}"),
        None => value.to_string(),
    };
    let (kind, name) = (e.kind, e.canonical_name.clone());
    model.upsert_entity(kind, &name, Vec::<String>::new(), BTreeMap::from([(key.to_string(), merged)]))?;
    Ok(())
}

/// Classifies every subject and object (with the predicates it appears
/// with as context), upserts the kept ones, and turns mapped predicates into
/// structural edges. Order of effects follows the input order.
pub fn ingest_triples(
    model: &mut Model,
    triples: &[RawTriple],
    classifier: &Classifier,
    predicates: &PredicateMap,
) -> Result<IngestReport, ConstructError> {
    let mut context: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for t in triples {
        context.entry(&t.subject).or_default().insert(t.predicate.clone());
        context.entry(&t.object).or_default().insert(format!("{}_of", t.predicate));
    }
    let classify = |name: &str| {
        let ctx: Vec<&String> = context.get(name).map(|s| s.iter().collect()).unwrap_or_default();
        classifier.classify(name, &ctx)
    };
    let mut report = IngestReport::default();
    for t in triples {
        report.processed += 1;
        let Target::Kind(sk) = classify(&t.subject) else {
            report.discarded += 1;
            continue;
        };
        let s = model.upsert_entity(sk, &t.subject, Vec::<String>::new(), BTreeMap::new())?;
        let object = match classify(&t.object) {
            Target::Kind(ok) => Some(model.upsert_entity(ok, &t.object, Vec::<String>::new(), BTreeMap::new())?),
            Target::Discard => None,
        };
        match (predicates.get(&t.predicate), object) {
            (Some(kind), Some(o)) => match model.add_structural(s, o, kind) {
                Ok(_) => report.relations += 1,
                Err(
                    e @ (CoreError::LayerViolation { .. }
                    | CoreError::InclusionCycle { .. }
                    | CoreError::SelfLoop(_)),
                ) => report.rejected.push(RejectedTriple {
                    triple: t.clone(),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e.into()),
            },
            _ => {
                attach_attribute(model, s, &t.predicate, &t.object)?;
                report.attributes += 1;
            }
        }
    }
    Ok(report)
}

/// Entity counts per kind and the number of structural links.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkgStats {
    pub by_kind: BTreeMap<EntityKind, usize>,
    pub entities: usize,
    pub links: usize,
}

pub fn skg_stats(model: &Model) -> SkgStats {
    let mut by_kind: BTreeMap<EntityKind, usize> = EntityKind::ALL.iter().map(|&k| (k, 0)).collect();
    for e in model.entities() {
        *by_kind.entry(e.kind).or_default() += 1;
    }
    SkgStats {
        by_kind,
        entities: model.entities().len(),
        links: model.structural().len(),
    }
}
