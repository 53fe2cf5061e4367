use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;
use msem_construct::{
    apply_rules, cluster_unmatched, ingest_triples, merge_external, parse_triples, skg_stats, AliasIndex, Classifier,
    FileKgClient, Fuser, Outcome, PredicateMap, Rulebase, TripleFormat,
};
use msem_core::{EntityKind, Model};
use msem_extract::{assemble_tags, pair_sentences, record, tokenize, RelationLabel, Tag, TitlePair};
use serde::Deserialize;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[derive(Deserialize)]
struct Doc {
    id: String,
    title: String,
    published_at: NaiveDate,
}

#[derive(Deserialize)]
struct Gold {
    doc: String,
    c: RelationLabel,
    x1: Vec<String>,
    x2: Vec<String>,
    y1: Vec<Tag>,
    y2: Vec<Tag>,
}

fn lines<T: for<'de> Deserialize<'de>>(text: &str) -> Vec<T> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn build() -> (Model, msem_construct::FusionReport) {
    let mut model = Model::new();
    let classifier = Classifier::from_json(&fixture("classifier.json")).unwrap();
    let (triples, skipped) = parse_triples(&fixture("triples.tsv"), TripleFormat::Tsv);
    assert_eq!(skipped.len(), 1);
    ingest_triples(&mut model, &triples, &classifier, &PredicateMap::default()).unwrap();
    let records = msem_construct::external::parse_records(&fixture("external.jsonl")).unwrap();
    let mut index = AliasIndex::build(&model);
    let merged = merge_external(&mut model, &records, &mut index).unwrap();
    assert_eq!((merged.merged, merged.created, merged.conflicts.len()), (1, 2, 1));

    let docs: BTreeMap<String, Doc> = lines::<Doc>(&fixture("corpus.jsonl")).into_iter().map(|d| (d.id.clone(), d)).collect();
    for g in lines::<Gold>(&fixture("annotations.jsonl")) {
        let doc = &docs[&g.doc];
        let (first, second) = pair_sentences(&doc.title).remove(0);
        assert_eq!(tokenize(&first), g.x1, "{}", g.doc);
        assert_eq!(second.as_deref().map(tokenize).unwrap_or_default(), g.x2, "{}", g.doc);
        let input = TitlePair { doc: &doc.id, first: &first, second: second.as_deref(), published: Some(doc.published_at) };
        let ext = assemble_tags(&input, &g.y1, &g.y2, g.c);
        assert!(ext.diagnostics.is_empty(), "{}: {:?}", g.doc, ext.diagnostics);
        let (_, diags) = record(&mut model, &ext).unwrap();
        assert!(diags.is_empty());
    }
    let kg = FileKgClient::from_jsonl(&fixture("kg.jsonl")).unwrap();
    let mut fuser = Fuser::new(&model, &kg).with_hints(&classifier);
    let report = fuser.fuse_all(&mut model).unwrap();
    (model, report)
}

#[test]
fn structural_part_statistics() {
    let (model, _) = build();
    assert_eq!(model.events().len(), 23);
    let seq = model.structural().iter().filter(|s| s.kind == msem_core::StructuralKind::Sequential).count();
    assert_eq!(seq, 2);
    let stats = skg_stats(&model);
    assert_eq!(stats.by_kind.values().sum::<usize>(), stats.entities);
    let tencent: Vec<_> = model.entities().iter().filter(|e| e.canonical_name == "Tencent").collect();
    assert_eq!(tencent.len(), 1);
    let ali = model.find_entity(EntityKind::Organization, "Alibaba Group").unwrap();
    assert!(model.entity(ali).unwrap().aliases.contains("Ali"));
}

#[test]
fn fusion_outcomes_on_the_toy_corpus() {
    let (model, report) = build();
    // 23 events: 23 actors, 7 recipients, 16 objects
    assert_eq!(report.outcomes.values().sum::<usize>(), 46);
    assert_eq!(report.count(Outcome::AliasMatch), 3);
    assert_eq!(report.count(Outcome::ExternalLookup), 4);
    assert_eq!(report.count(Outcome::Created), 4);
    assert_eq!(report.count(Outcome::DirectMatch), 35);
    let created = ["Tencent Meeting", "WhatsApp", "prices", "Hema stores"];
    for name in created {
        assert!(model.entities().iter().any(|e| e.canonical_name == name), "{name}");
    }
    assert!(model.find_entity(EntityKind::Organization, "WhatsApp").is_some());
    assert!(model.find_entity(EntityKind::Service, "WhatsApp").is_some());
}

fn render(model: &Model) -> Vec<Value> {
    let name = |id| {
        let e = model.entity(id).unwrap();
        serde_json::json!([e.kind.as_str(), e.canonical_name])
    };
    model
        .evolutionary()
        .iter()
        .map(|r| {
            serde_json::json!({
                "doc": model.event(r.provenance).unwrap().source_doc,
                "src": name(r.source),
                "dst": name(r.destination),
                "rel": r.relation,
                "ts": r.timestamp.to_string(),
                "attrs": r.attributes,
            })
        })
        .collect()
}

#[test]
fn fixture_rulebase_produces_the_golden_quintuples() {
    let golden: Value = serde_json::from_str(&fixture("golden_rules.json")).unwrap();
    let rules = Rulebase::from_json(&fixture("rules.json")).unwrap();
    let mut runs = Vec::new();
    for _ in 0..3 {
        let (mut model, _) = build();
        let report = apply_rules(&mut model, &rules).unwrap();
        assert!(report.skipped.is_empty(), "{:?}", report.skipped);
        assert_eq!(serde_json::to_value(&report.coverage).unwrap(), golden["coverage"]);
        let unmatched: Vec<&str> = report.unmatched.iter().map(|e| model.event(*e).unwrap().source_doc.as_str()).collect();
        assert_eq!(serde_json::to_value(&unmatched).unwrap(), golden["unmatched_docs"]);
        let mut got = render(&model);
        let mut want = golden["quintuples"].as_array().unwrap().clone();
        let key = |v: &Value| v.to_string();
        got.sort_by_key(key);
        want.sort_by_key(key);
        assert_eq!(got, want);
        runs.push(report.quintuples);
    }
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn unmatched_events_cluster_by_title() {
    let (mut model, _) = build();
    let report = apply_rules(&mut model, &Rulebase::from_json(&fixture("rules.json")).unwrap()).unwrap();
    let items: Vec<_> = report
        .unmatched
        .iter()
        .map(|&e| (e, model.event(e).unwrap().title.clone().unwrap()))
        .collect();
    let clusters = cluster_unmatched(&items, 2, 11);
    assert_eq!(clusters.iter().map(|c| c.members.len()).collect::<Vec<_>>(), vec![2, 1]);
    assert!(clusters[0].terms.contains(&"raises".to_string()), "{:?}", clusters[0].terms);
}
