#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::NaiveDate;
use msem_core::{Component, EntityId, EntityKind, EventDraft, EventId, Model, Quintuple, StructuralKind};

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

pub fn entity(model: &mut Model, kind: EntityKind, name: &str) -> EntityId {
    model.upsert_entity(kind, name, Vec::<String>::new(), BTreeMap::new()).unwrap()
}

/// Records `actor action recipient/object` on `day`, binds the mentions and
/// adds one evolutionary edge from the actor to `target`.
#[allow(clippy::too_many_arguments)]
pub fn happen(
    model: &mut Model,
    doc: &str,
    day: &str,
    actor: EntityId,
    action: &str,
    recipient: Option<EntityId>,
    object: Option<EntityId>,
    target: EntityId,
) -> EventId {
    let name = |m: &Model, id: EntityId| m.entity(id).unwrap().canonical_name.clone();
    let mut draft = EventDraft::new(doc, action).actor(name(model, actor)).at(date(day));
    if let Some(r) = recipient {
        draft = draft.recipient(name(model, r));
    }
    if let Some(o) = object {
        draft = draft.object(name(model, o));
    }
    let title = format!(
        "{} {action} {}",
        name(model, actor),
        [recipient, object].into_iter().flatten().map(|id| name(model, id)).collect::<Vec<_>>().join(" ")
    );
    let ev = model.record_event(draft.title(title.trim_end())).unwrap();
    model.bind_mention(ev, Component::Actor, actor).unwrap();
    if let Some(r) = recipient {
        model.bind_mention(ev, Component::Recipient, r).unwrap();
    }
    if let Some(o) = object {
        model.bind_mention(ev, Component::Object, o).unwrap();
    }
    model
        .apply_evolution(Quintuple {
            source: actor,
            destination: target,
            relation: action.to_string(),
            timestamp: date(day),
            attributes: BTreeMap::new(),
            event: ev,
        })
        .unwrap();
    ev
}

pub const SNAPSHOT_TIMES: [&str; 3] = ["2020-03-31", "2020-06-30", "2020-09-30"];

/// Three quarters of partnership news among eight companies. Read per
/// quarter: the four A companies form one tight group, break into two pairs,
/// then regroup; the D pair is active only in the first quarter and the E
/// pair only in the last.
pub fn three_snapshot_model() -> Model {
    let mut m = Model::new();
    let a: Vec<EntityId> = (1..=4).map(|i| entity(&mut m, EntityKind::Organization, &format!("A{i}"))).collect();
    let d: Vec<EntityId> = (1..=2).map(|i| entity(&mut m, EntityKind::Organization, &format!("D{i}"))).collect();
    let e: Vec<EntityId> = (1..=2).map(|i| entity(&mut m, EntityKind::Organization, &format!("E{i}"))).collect();
    let mut n = 0;
    let mut link = |m: &mut Model, day: &str, x: EntityId, y: EntityId| {
        n += 1;
        happen(m, &format!("q{n:02}"), day, x, "partners with", Some(y), None, y);
    };
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        link(&mut m, "2020-02-01", a[i], a[j]);
    }
    link(&mut m, "2020-02-15", d[0], d[1]);
    link(&mut m, "2020-05-01", a[0], a[1]);
    link(&mut m, "2020-05-02", a[2], a[3]);
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        link(&mut m, "2020-08-01", a[i], a[j]);
    }
    link(&mut m, "2020-08-15", e[0], e[1]);
    m
}

/// Two 4-cliques joined by one bridge edge.
pub fn two_cliques() -> msem_evolution::Graph {
    let ids: Vec<EntityId> = (0..8).map(EntityId).collect();
    let mut g = msem_evolution::Graph::new(ids.clone());
    for base in [0, 4] {
        for x in 0..4 {
            for y in x + 1..4 {
                g.add_edge(ids[base + x], ids[base + y], 1.0);
            }
        }
    }
    g.add_edge(ids[3], ids[4], 1.0);
    g
}

/// Best modularity over every split of the nodes into at most two groups.
pub fn best_bipartition(g: &msem_evolution::Graph) -> f64 {
    let n = g.len();
    (0..1u32 << (n - 1))
        .map(|mask| {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let labels = if labels.contains(&0) { labels } else { vec![0; n] };
            msem_evolution::modularity(g, &labels)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub struct Ofo {
    pub model: Model,
    pub ofo: EntityId,
    pub deposit_free: EntityId,
    pub no_deposit: EntityId,
    pub arc: Vec<EventId>,
}

/// The deposit-free arc of a bike-sharing company plus unrelated news.
pub fn ofo_model() -> Ofo {
    let mut m = Model::new();
    let ofo = entity(&mut m, EntityKind::Organization, "ofo");
    let mobike = entity(&mut m, EntityKind::Organization, "Mobike");
    let zhima = entity(&mut m, EntityKind::Organization, "Zhima Credit");
    let alipay = entity(&mut m, EntityKind::Organization, "Alipay");
    let deposit_free = entity(&mut m, EntityKind::FunctionalFeature, "deposit-free");
    let no_deposit = entity(&mut m, EntityKind::FunctionalFeature, "no-deposit riding");
    let bikes = entity(&mut m, EntityKind::Service, "bike sharing");
    m.add_structural(no_deposit, deposit_free, StructuralKind::Equivalence).unwrap();

    happen(&mut m, "n01", "2016-01-10", ofo, "launch", None, Some(bikes), bikes);
    let mut arc = vec![
        happen(&mut m, "n02", "2017-03-15", ofo, "launch", None, Some(deposit_free), deposit_free),
        happen(&mut m, "n03", "2017-06-06", ofo, "partner", Some(zhima), Some(deposit_free), zhima),
    ];
    happen(&mut m, "n04", "2017-08-01", mobike, "launch", None, Some(deposit_free), deposit_free);
    arc.push(happen(&mut m, "n05", "2017-09-01", alipay, "partner", Some(ofo), Some(deposit_free), ofo));
    arc.push(happen(&mut m, "n06", "2017-12-20", ofo, "expand", None, Some(no_deposit), no_deposit));
    arc.push(happen(&mut m, "n07", "2018-05-10", ofo, "cancel", None, Some(deposit_free), deposit_free));
    happen(&mut m, "n08", "2018-05-10", ofo, "upgrade", None, Some(bikes), bikes);
    arc.push(happen(&mut m, "n09", "2018-09-01", ofo, "restore", None, Some(deposit_free), deposit_free));
    Ofo { model: m, ofo, deposit_free, no_deposit, arc }
}
