use std::collections::BTreeMap;

use chrono::NaiveDate;
use msem_core::{
    CoreError, EntityId, EntityKind, EventDraft, Layer, Model, NodeRef, Quintuple, StructuralKind,
};
use proptest::prelude::*;

fn day(offset: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap() + chrono::Duration::days(offset)
}

fn ent(m: &mut Model, kind: EntityKind, name: &str) -> EntityId {
    m.upsert_entity(kind, name, Vec::<String>::new(), BTreeMap::new())
        .unwrap()
}

fn fixture() -> Model {
    let mut m = Model::new();
    let ofo = ent(&mut m, EntityKind::Organization, "ofo");
    let alipay = ent(&mut m, EntityKind::Channel, "Alipay");
    let df = ent(&mut m, EntityKind::FunctionalFeature, "deposit-free");
    let bike = ent(&mut m, EntityKind::FunctionalFeature, "bike sharing");
    let dom = ent(&mut m, EntityKind::Domain, "transportation");
    m.add_structural(bike, df, StructuralKind::Inclusion).unwrap();
    m.add_structural(ofo, dom, StructuralKind::BelongTo).unwrap();
    let e1 = m
        .record_event(
            EventDraft::new("n1", "cooperates with")
                .actor("ofo")
                .recipient("Alipay")
                .object("deposit-free")
                .at(day(40)),
        )
        .unwrap();
    let e2 = m
        .record_event(
            EventDraft::new("n2", "cancels")
                .actor("ofo")
                .object("deposit-free")
                .attribute("in some cities")
                .at(day(130)),
        )
        .unwrap();
    m.bind_mention(e1, msem_core::Component::Actor, ofo).unwrap();
    m.bind_mention(e1, msem_core::Component::Recipient, alipay).unwrap();
    m.add_sequential(e1, e2).unwrap();
    m.apply_evolution(Quintuple {
        source: ofo,
        destination: alipay,
        relation: "cooperate".into(),
        timestamp: day(40),
        attributes: BTreeMap::new(),
        event: e1,
    })
    .unwrap();
    m.apply_evolution(Quintuple {
        source: ofo,
        destination: df,
        relation: "cancel".into(),
        timestamp: day(130),
        attributes: [("scope".to_string(), "in some cities".to_string())].into(),
        event: e2,
    })
    .unwrap();
    m
}

#[test]
fn export_import_round_trip() {
    let m = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    m.export_model(&path).unwrap();
    let back = Model::import_model(&path).unwrap();
    assert_eq!(m, back);
    assert_eq!(m.to_json(), back.to_json());
}

#[test]
fn empty_model_round_trips() {
    let m = Model::new();
    assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
}

#[test]
fn export_uses_documented_field_names() {
    let v: serde_json::Value = serde_json::from_str(&fixture().to_json()).unwrap();
    assert_eq!(v["version"], 1);
    let e = &v["entities"][0];
    for k in ["id", "kind", "name", "aliases", "attributes"] {
        assert!(e.get(k).is_some(), "entity field {k}");
    }
    let evo = &v["evolutionary"][0];
    for k in ["src", "dst", "rel", "ts", "attrs", "event"] {
        assert!(evo.get(k).is_some(), "evolutionary field {k}");
    }
    assert_eq!(evo["ts"], "2018-02-10");
}

#[test]
fn truncated_file_reports_offset() {
    let text = fixture().to_json();
    let cut = &text[..text.len() / 2];
    match Model::from_json(cut) {
        Err(CoreError::Parse { offset, .. }) => assert!(offset <= cut.len() && offset > 0),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn version_mismatch_rejected() {
    let text = fixture().to_json().replacen("\"version\": 1", "\"version\": 7", 1);
    assert!(matches!(Model::from_json(&text), Err(CoreError::Version(7))));
}

#[test]
fn snapshot_boundaries() {
    let m = fixture();
    let before = m.snapshot_at(NaiveDate::MIN);
    assert!(before.evolutionary.is_empty());
    assert_eq!(before.structural.len(), m.structural().len());
    let mid = m.snapshot_at(day(100));
    assert_eq!(mid.evolutionary.len(), 1);
    assert_eq!(mid.evolutionary[0].relation, "cooperate");
    assert_eq!(m.snapshot_at(day(130)).evolutionary.len(), 2);
}

#[test]
fn reingesting_is_idempotent() {
    let mut m = fixture();
    let counts = |m: &Model| {
        (
            m.entities().len(),
            m.events().len(),
            m.structural().len(),
            m.evolutionary().len(),
        )
    };
    let before = counts(&m);
    let again = fixture();
    // replay every record of an identical stream
    for e in again.entities() {
        m.upsert_entity(e.kind, &e.canonical_name, e.aliases.clone(), e.attributes.clone())
            .unwrap();
    }
    for s in again.structural() {
        m.add_structural(s.src, s.dst, s.kind).unwrap();
    }
    for q in again.evolutionary() {
        m.apply_evolution(q.quintuple()).unwrap();
    }
    assert_eq!(before, counts(&m));
}

const KINDS: [StructuralKind; 8] = [
    StructuralKind::Equivalence,
    StructuralKind::Inclusion,
    StructuralKind::Overlap,
    StructuralKind::HasActor,
    StructuralKind::HasRecipient,
    StructuralKind::HasObject,
    StructuralKind::BelongTo,
    StructuralKind::Sequential,
];

fn layer(m: &Model, n: NodeRef) -> Layer {
    match n {
        NodeRef::Entity(id) => m.entity(id).unwrap().layer(),
        NodeRef::Event(_) => Layer::Event,
    }
}

fn allowed(kind: StructuralKind, s: Layer, d: Layer) -> bool {
    use Layer::*;
    match kind {
        StructuralKind::Equivalence | StructuralKind::Inclusion | StructuralKind::Overlap => {
            s == d && (s == ServiceFeature || s == Domain)
        }
        StructuralKind::HasActor | StructuralKind::HasRecipient => s == Event && d == Stakeholder,
        StructuralKind::HasObject => s == Event && d == ServiceFeature,
        StructuralKind::BelongTo => (s == Stakeholder || s == ServiceFeature) && d == Domain,
        StructuralKind::Sequential => s == Event && d == Event,
    }
}

proptest! {
    #[test]
    fn snapshots_are_monotone(times in prop::collection::vec(0i64..365, 1..30), a in 0i64..400, b in 0i64..400) {
        let mut m = Model::new();
        let x = ent(&mut m, EntityKind::Organization, "x");
        let y = ent(&mut m, EntityKind::Organization, "y");
        for (i, t) in times.iter().enumerate() {
            let ev = m.record_event(EventDraft::new(format!("d{i}"), "acts").at(day(*t))).unwrap();
            m.apply_evolution(Quintuple {
                source: x, destination: y, relation: "r".into(), timestamp: day(*t),
                attributes: BTreeMap::new(), event: ev,
            }).unwrap();
        }
        let (t1, t2) = (day(a.min(b)), day(a.max(b)));
        let s1 = m.snapshot_at(t1);
        let s2 = m.snapshot_at(t2);
        prop_assert!(s1.is_subset_of(&s2));
        prop_assert_eq!(s1.structural.len(), s2.structural.len());
        prop_assert!(s1.evolutionary.iter().all(|e| e.timestamp <= t1));
    }

    #[test]
    fn layer_typing_enforced(picks in prop::collection::vec((0usize..9, 0usize..9, 0usize..8), 1..60)) {
        let mut m = Model::new();
        let mut nodes: Vec<NodeRef> = EntityKind::ALL
            .iter()
            .enumerate()
            .map(|(i, k)| ent(&mut m, *k, &format!("n{i}")).into())
            .collect();
        nodes.push(m.record_event(EventDraft::new("d", "acts").at(day(0))).unwrap().into());
        nodes.push(m.record_event(EventDraft::new("e", "acts").at(day(1))).unwrap().into());
        for (s, d, k) in picks {
            let (src, dst, kind) = (nodes[s], nodes[d], KINDS[k]);
            let res = m.add_structural(src, dst, kind);
            if src == dst || !allowed(kind, layer(&m, src), layer(&m, dst)) {
                prop_assert!(res.is_err());
            }
        }
        for e in m.structural() {
            prop_assert!(allowed(e.kind, layer(&m, e.src), layer(&m, e.dst)));
        }
    }

    #[test]
    fn inclusion_stays_acyclic(edges in prop::collection::vec((0usize..6, 0usize..6), 1..40)) {
        let mut m = Model::new();
        let ids: Vec<EntityId> = (0..6)
            .map(|i| ent(&mut m, EntityKind::FunctionalFeature, &format!("f{i}")))
            .collect();
        for (a, b) in edges {
            let _ = m.add_structural(ids[a], ids[b], StructuralKind::Inclusion);
        }
        // Kahn's algorithm must consume every node
        let mut indeg = [0usize; 6];
        let inc: Vec<(usize, usize)> = m.structural().iter().map(|e| match (e.src, e.dst) {
            (NodeRef::Entity(s), NodeRef::Entity(d)) => (s.0 as usize, d.0 as usize),
            _ => unreachable!(),
        }).collect();
        for &(_, d) in &inc { indeg[d] += 1; }
        let mut queue: Vec<usize> = (0..6).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(n) = queue.pop() {
            seen += 1;
            for &(s, d) in &inc {
                if s == n { indeg[d] -= 1; if indeg[d] == 0 { queue.push(d); } }
            }
        }
        prop_assert_eq!(seen, 6);
    }
}
