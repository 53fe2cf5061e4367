use std::collections::BTreeSet;

use chrono::NaiveDate;
use msem_core::EntityId;
use msem_evolution::{align_communities, classify_events, communities_of, Community, EventKind, Graph, DEFAULT_THETA};
use proptest::prelude::*;

fn graph(n: u32, edges: &[(u32, u32, u8)]) -> Graph {
    let mut g = Graph::new((0..n).map(EntityId));
    for &(a, b, w) in edges {
        g.add_edge(EntityId(a % n), EntityId(b % n), w as f64 + 1.0);
    }
    g
}

fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, d).unwrap()
}

proptest! {
    #[test]
    fn communities_partition_the_nodes(n in 1u32..30, edges in prop::collection::vec((0u32..30, 0u32..30, 0u8..3), 0..80), seed in 0u64..5) {
        let g = graph(n, &edges);
        let cs = communities_of(&g, day(1), seed, 5);
        let mut seen = BTreeSet::new();
        for c in &cs {
            prop_assert!(!c.members.is_empty());
            prop_assert!(c.key_nodes.iter().all(|k| c.members.contains(k)));
            prop_assert!(c.key_nodes.len() <= 5);
            for m in &c.members {
                prop_assert!(seen.insert(*m));
            }
        }
        prop_assert_eq!(seen.len(), n as usize);
        prop_assert_eq!(cs, communities_of(&g, day(1), seed, 5));
    }

    #[test]
    fn every_community_is_labeled_once(
        prev in prop::collection::vec(prop::collection::btree_set(0u32..20, 1..6), 0..6),
        next in prop::collection::vec(prop::collection::btree_set(0u32..20, 1..6), 0..6),
    ) {
        let mk = |at, sets: &[BTreeSet<u32>]| -> Vec<Community> {
            sets.iter().enumerate().map(|(i, s)| {
                let ids: Vec<EntityId> = s.iter().map(|&x| EntityId(x)).collect();
                Community::new(day(at), i, ids.clone(), ids.into_iter().take(5).collect())
            }).collect()
        };
        let (p, n) = (mk(1, &prev), mk(2, &next));
        let events = classify_events(&align_communities(&p, &n, DEFAULT_THETA));
        let mut before = Vec::new();
        let mut after = Vec::new();
        for e in &events {
            match e.kind {
                EventKind::Birth => prop_assert!(e.before.is_empty() && e.after.len() == 1),
                EventKind::Death => prop_assert!(e.before.len() == 1 && e.after.is_empty()),
                EventKind::Continue => prop_assert!(e.before.len() == 1 && e.after.len() == 1),
                EventKind::Split => prop_assert!(e.before.len() == 1 && e.after.len() >= 2),
                EventKind::Merge => prop_assert!(e.before.len() >= 2 && e.after.len() == 1),
            }
            before.extend(e.before.clone());
            after.extend(e.after.clone());
        }
        before.sort();
        after.sort();
        let mut ep: Vec<String> = p.iter().map(|c| c.id.clone()).collect();
        let mut en: Vec<String> = n.iter().map(|c| c.id.clone()).collect();
        ep.sort();
        en.sort();
        prop_assert_eq!(before, ep);
        prop_assert_eq!(after, en);
    }
}
