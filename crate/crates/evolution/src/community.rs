//! Communities per snapshot, their alignment across adjacent snapshots and
//! the resulting evolution events.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use msem_core::{EntityId, EventId, ModelSnapshot};
use serde::{Deserialize, Serialize};

use crate::graph::{project, Graph};
use crate::louvain::louvain;

pub const DEFAULT_KEY_NODES: usize = 5;
pub const DEFAULT_THETA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: String,
    pub at: NaiveDate,
    pub members: Vec<EntityId>,
    #[serde(rename = "keyNodes")]
    pub key_nodes: Vec<EntityId>,
}

impl Community {
    /// `key_nodes` are the first `m` members in the given order.
    pub fn new(at: NaiveDate, index: usize, members: impl IntoIterator<Item = EntityId>, key_nodes: Vec<EntityId>) -> Self {
        let mut members: Vec<EntityId> = members.into_iter().collect();
        members.sort();
        members.dedup();
        Community {
            id: format!("{at}#{index}"),
            at,
            members,
            key_nodes,
        }
    }
}

/// Louvain partition of `g`, ordered by smallest member. Key nodes are the
/// `m` members with the largest weighted degree, ties to the smaller id.
pub fn communities_of(g: &Graph, at: NaiveDate, seed: u64, m: usize) -> Vec<Community> {
    let labels = louvain(g, seed);
    let k = labels.iter().max().map_or(0, |&c| c + 1);
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        groups[c].push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    groups.sort_by_key(|members| members.iter().map(|&i| g.nodes()[i]).min());
    groups
        .into_iter()
        .enumerate()
        .map(|(index, members)| {
            let mut ranked = members.clone();
            ranked.sort_by(|&a, &b| g.degree(b).total_cmp(&g.degree(a)).then(g.nodes()[a].cmp(&g.nodes()[b])));
            let keys = ranked.into_iter().take(m).map(|i| g.nodes()[i]).collect();
            Community::new(at, index, members.into_iter().map(|i| g.nodes()[i]), keys)
        })
        .collect()
}

/// Communities of the cumulative stakeholder projection of `snapshot`.
pub fn detect_communities(snapshot: &ModelSnapshot<'_>, seed: u64) -> Vec<Community> {
    communities_of(&project(snapshot, None), snapshot.at, seed, DEFAULT_KEY_NODES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub prev: usize,
    pub next: usize,
    pub jaccard: f64,
    /// Predecessor key nodes found in the successor.
    pub key_nodes_kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMap {
    pub prev: Vec<String>,
    pub next: Vec<String>,
    pub pairs: Vec<AlignedPair>,
}

pub fn jaccard(a: &[EntityId], b: &[EntityId]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// A pair aligns when its Jaccard reaches `theta` or the successor holds at
/// least half of the predecessor's key nodes.
pub fn align_communities(prev: &[Community], next: &[Community], theta: f64) -> AlignmentMap {
    let mut pairs = Vec::new();
    for (p, pc) in prev.iter().enumerate() {
        for (n, nc) in next.iter().enumerate() {
            let j = jaccard(&pc.members, &nc.members);
            let kept = pc.key_nodes.iter().filter(|k| nc.members.binary_search(k).is_ok()).count();
            let by_keys = !pc.key_nodes.is_empty() && 2 * kept >= pc.key_nodes.len();
            if j > 0.0 && (j >= theta || by_keys) {
                pairs.push(AlignedPair { prev: p, next: n, jaccard: j, key_nodes_kept: kept });
            }
        }
    }
    AlignmentMap {
        prev: prev.iter().map(|c| c.id.clone()).collect(),
        next: next.iter().map(|c| c.id.clone()).collect(),
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Birth,
    Death,
    Split,
    Merge,
    Continue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionEvent {
    pub kind: EventKind,
    pub before: Vec<String>,
    pub after: Vec<String>,
    /// Events whose evolutionary edges between the two snapshots touch a member.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drivers: Vec<EventId>,
}

/// Groups aligned communities into events. Pairs are admitted strongest
/// first and a pair that would make a group many-to-many is dropped, so every
/// group has one predecessor or one successor and every community lands in
/// exactly one event.
pub fn classify_events(map: &AlignmentMap) -> Vec<EvolutionEvent> {
    let (np, nn) = (map.prev.len(), map.next.len());
    // groups over prev nodes 0..np and next nodes np..np+nn
    let mut group: Vec<usize> = (0..np + nn).collect();
    let mut pairs: Vec<&AlignedPair> = map.pairs.iter().collect();
    pairs.sort_by(|a, b| b.jaccard.total_cmp(&a.jaccard).then((a.prev, a.next).cmp(&(b.prev, b.next))));
    let counts = |group: &[usize], g: usize| {
        let p = (0..np).filter(|&i| group[i] == g).count();
        let n = (np..np + nn).filter(|&i| group[i] == g).count();
        (p, n)
    };
    for pair in pairs {
        let (gp, gn) = (group[pair.prev], group[np + pair.next]);
        if gp == gn {
            continue;
        }
        let (p1, n1) = counts(&group, gp);
        let (p2, n2) = counts(&group, gn);
        if p1 + p2 == 1 || n1 + n2 == 1 {
            for g in group.iter_mut() {
                if *g == gn {
                    *g = gp;
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut events = Vec::new();
    for start in 0..np + nn {
        let g = group[start];
        if !seen.insert(g) {
            continue;
        }
        let before: Vec<String> = (0..np).filter(|&i| group[i] == g).map(|i| map.prev[i].clone()).collect();
        let after: Vec<String> = (np..np + nn).filter(|&i| group[i] == g).map(|i| map.next[i - np].clone()).collect();
        let kind = match (before.len(), after.len()) {
            (0, _) => EventKind::Birth,
            (_, 0) => EventKind::Death,
            (1, 1) => EventKind::Continue,
            (1, _) => EventKind::Split,
            _ => EventKind::Merge,
        };
        events.push(EvolutionEvent { kind, before, after, drivers: Vec::new() });
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, d).unwrap()
    }

    fn comm(at: u32, index: usize, members: &[u32]) -> Community {
        let ids: Vec<EntityId> = members.iter().map(|&m| EntityId(m)).collect();
        Community::new(day(at), index, ids.clone(), ids)
    }

    fn kinds(prev: &[Community], next: &[Community]) -> Vec<EventKind> {
        classify_events(&align_communities(prev, next, DEFAULT_THETA)).into_iter().map(|e| e.kind).collect()
    }

    #[test]
    fn jaccard_cases() {
        let abcd = comm(1, 0, &[0, 1, 2, 3]);
        let ab = comm(2, 0, &[0, 1]);
        assert_eq!(jaccard(&abcd.members, &abcd.members), 1.0);
        assert_eq!(jaccard(&abcd.members, &ab.members), 0.5);
        assert_eq!(jaccard(&ab.members, &comm(2, 1, &[7, 8]).members), 0.0);
    }

    #[test]
    fn split_merge_birth_death_continue() {
        let abcd = [comm(1, 0, &[0, 1, 2, 3])];
        let halves = [comm(2, 0, &[0, 1]), comm(2, 1, &[2, 3])];
        let map = align_communities(&abcd, &halves, DEFAULT_THETA);
        assert_eq!(map.pairs.len(), 2);
        assert!(map.pairs.iter().all(|p| p.jaccard == 0.5));
        assert_eq!(kinds(&abcd, &halves), vec![EventKind::Split]);
        assert_eq!(kinds(&halves, &abcd), vec![EventKind::Merge]);
        assert_eq!(kinds(&abcd, &abcd), vec![EventKind::Continue]);
        assert_eq!(kinds(&abcd, &[comm(2, 0, &[9])]), vec![EventKind::Death, EventKind::Birth]);
    }

    #[test]
    fn key_nodes_rescue_a_low_jaccard_pair() {
        let small = Community::new(day(1), 0, [EntityId(0), EntityId(1), EntityId(2)], vec![EntityId(0), EntityId(1)]);
        let big = comm(2, 0, &(0..1).chain(10..20).collect::<Vec<_>>());
        let map = align_communities(&[small], &[big], DEFAULT_THETA);
        assert_eq!(map.pairs.len(), 1);
        assert!(map.pairs[0].jaccard < DEFAULT_THETA);
    }

    #[test]
    fn many_to_many_is_broken_at_the_weakest_pair() {
        let prev = [comm(1, 0, &[0, 1, 2]), comm(1, 1, &[3, 4, 5])];
        let next = [comm(2, 0, &[0, 1, 3]), comm(2, 1, &[2, 4, 5])];
        let events = classify_events(&align_communities(&prev, &next, DEFAULT_THETA));
        let labeled: usize = events.iter().map(|e| e.before.len() + e.after.len()).sum();
        assert_eq!(labeled, 4);
        for e in &events {
            assert!(e.before.len() <= 1 || e.after.len() <= 1);
        }
    }
}
