//! External-source records and knowledge-graph lookups.

use std::collections::BTreeMap;
use std::time::Duration;

use msem_core::text::normalize;
use msem_core::{EntityKind, Model};
use serde::{Deserialize, Serialize};

use crate::alias::{pick, AliasIndex};
use crate::error::ConstructError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalRecord {
    pub kind: EntityKind,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

pub fn parse_records(text: &str) -> Result<Vec<ExternalRecord>, ConstructError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ConstructError::Format {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeConflict {
    pub record: String,
    pub record_kind: EntityKind,
    pub existing: String,
    pub existing_kind: EntityKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub merged: usize,
    pub created: usize,
    pub conflicts: Vec<MergeConflict>,
}

/// Merges each record into the entity its name or an alias resolves to, or
/// creates it. A record resolving only to entities of other kinds is a
/// conflict and is skipped.
pub fn merge_external(
    model: &mut Model,
    records: &[ExternalRecord],
    index: &mut AliasIndex,
) -> Result<MergeReport, ConstructError> {
    let mut report = MergeReport::default();
    for r in records {
        let hits: Vec<_> = std::iter::once(&r.name)
            .chain(&r.aliases)
            .flat_map(|s| index.lookup(s))
            .collect();
        let same_kind = hits.iter().copied().filter(|&id| model.entity(id).is_some_and(|e| e.kind == r.kind));
        let id = match pick(model, same_kind, None) {
            Some(id) => {
                let e = model.entity(id).expect("picked from the model");
                let name = e.canonical_name.clone();
                let aliases = std::iter::once(r.name.clone()).chain(r.aliases.iter().cloned());
                report.merged += 1;
                model.upsert_entity(r.kind, &name, aliases, r.attributes.clone())?
            }
            None => {
                if let Some(other) = pick(model, hits, None) {
                    let e = model.entity(other).expect("picked from the model");
                    report.conflicts.push(MergeConflict {
                        record: r.name.clone(),
                        record_kind: r.kind,
                        existing: e.canonical_name.clone(),
                        existing_kind: e.kind,
                    });
                    continue;
                }
                report.created += 1;
                model.upsert_entity(r.kind, &r.name, r.aliases.iter().cloned(), r.attributes.clone())?
            }
        };
        index.add(model, id);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgRecord {
    pub canonical: String,
    #[serde(default)]
    pub kind: Option<EntityKind>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// Name lookup against an external knowledge graph.
pub trait KgClient {
    /// `Ok(None)` when the source has no entry; transport problems are errors.
    fn lookup(&self, name: &str) -> Result<Option<KgRecord>, ConstructError>;
}

#[derive(Deserialize)]
struct Response {
    found: bool,
    #[serde(default)]
    canonical: Option<String>,
    #[serde(default)]
    kind: Option<EntityKind>,
    #[serde(default)]
    aliases: Vec<String>,
}

impl Response {
    fn into_record(self) -> Result<Option<KgRecord>, ConstructError> {
        if !self.found {
            return Ok(None);
        }
        let canonical = self
            .canonical
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| ConstructError::BadResponse("found without a canonical name".into()))?;
        Ok(Some(KgRecord {
            canonical,
            kind: self.kind,
            aliases: self.aliases,
        }))
    }
}

/// `GET <endpoint>?entity=<name>` returning
/// `{"found":bool,"canonical":...,"aliases":[...]}`.
#[derive(Debug, Clone)]
pub struct HttpKgClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpKgClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpKgClient {
            endpoint: endpoint.into(),
            agent,
        }
    }
}

impl KgClient for HttpKgClient {
    fn lookup(&self, name: &str) -> Result<Option<KgRecord>, ConstructError> {
        let mut resp = self
            .agent
            .get(&self.endpoint)
            .query("entity", name)
            .call()
            .map_err(|e| ConstructError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if status == 404 {
            return Ok(None);
        }
        if !status.is_success() {
            return Err(ConstructError::Unavailable(format!("status {status}")));
        }
        let body: Response = resp
            .body_mut()
            .read_json()
            .map_err(|e| ConstructError::BadResponse(e.to_string()))?;
        body.into_record()
    }
}

/// In-memory source with exact (normalized) matching on canonical names and
/// aliases; loaded from JSON Lines of [`KgRecord`].
#[derive(Debug, Clone, Default)]
pub struct FileKgClient {
    records: Vec<KgRecord>,
    index: BTreeMap<String, usize>,
}

impl FileKgClient {
    pub fn new(records: Vec<KgRecord>) -> Self {
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            for s in std::iter::once(&r.canonical).chain(&r.aliases) {
                index.entry(normalize(s)).or_insert(i);
            }
        }
        FileKgClient { records, index }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ConstructError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| ConstructError::Format {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::new(records))
    }
}

impl KgClient for FileKgClient {
    fn lookup(&self, name: &str) -> Result<Option<KgRecord>, ConstructError> {
        Ok(self.index.get(&normalize(name)).map(|&i| self.records[i].clone()))
    }
}

/// Source that always fails, for exercising the fallback path.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineKgClient;

impl KgClient for OfflineKgClient {
    fn lookup(&self, _: &str) -> Result<Option<KgRecord>, ConstructError> {
        Err(ConstructError::Unavailable("offline".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> (Model, AliasIndex) {
        let mut m = Model::new();
        m.upsert_entity(EntityKind::Organization, "Alibaba Group Holding LTD", ["Ali", "Alibaba"], BTreeMap::new())
            .unwrap();
        let idx = AliasIndex::build(&m);
        (m, idx)
    }

    fn rec(kind: EntityKind, name: &str) -> ExternalRecord {
        ExternalRecord {
            kind,
            name: name.into(),
            aliases: vec![],
            attributes: BTreeMap::from([("source".into(), "app store".into())]),
        }
    }

    #[test]
    fn alias_hit_merges_miss_creates_kind_clash_conflicts() {
        let (mut m, mut idx) = model();
        let records = vec![
            rec(EntityKind::Organization, "Ali"),
            rec(EntityKind::Organization, "Globex Corp"),
            rec(EntityKind::Channel, "Alibaba"),
        ];
        let r = merge_external(&mut m, &records, &mut idx).unwrap();
        assert_eq!((r.merged, r.created, r.conflicts.len()), (1, 1, 1));
        assert_eq!(m.entities().len(), 2);
        assert_eq!(m.entities()[0].attributes["source"], "app store");
        assert_eq!(r.conflicts[0].existing_kind, EntityKind::Organization);
        let once = m.clone();
        merge_external(&mut m, &records, &mut idx).unwrap();
        assert_eq!(m, once);
    }

    #[test]
    fn file_client_is_exact_after_normalization() {
        let c = FileKgClient::from_jsonl(
            "{\"canonical\":\"Tencent Holdings\",\"kind\":\"Organization\",\"aliases\":[\"Tencent\"]}\n",
        )
        .unwrap();
        assert_eq!(c.lookup(" tencent ").unwrap().unwrap().canonical, "Tencent Holdings");
        assert!(c.lookup("Tencen").unwrap().is_none());
        assert!(OfflineKgClient.lookup("x").is_err());
    }

    #[test]
    fn response_contract() {
        let r: Response = serde_json::from_str(r#"{"found":false}"#).unwrap();
        assert_eq!(r.into_record().unwrap(), None);
        let r: Response = serde_json::from_str(r#"{"found":true}"#).unwrap();
        assert!(r.into_record().is_err());
        let r: Response = serde_json::from_str(r#"{"found":true,"canonical":"X","aliases":["Y"]}"#).unwrap();
        assert_eq!(r.into_record().unwrap().unwrap().aliases, vec!["Y"]);
    }
}
