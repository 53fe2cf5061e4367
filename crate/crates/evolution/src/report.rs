use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use msem_core::{EntityId, EventId, Model};
use serde::{Deserialize, Serialize};

use crate::community::{align_communities, classify_events, communities_of, Community, EvolutionEvent, DEFAULT_KEY_NODES, DEFAULT_THETA};
use crate::error::EvolutionError;
use crate::graph::project;
use crate::snapshots::build_snapshots;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Every edge up to the snapshot time.
    #[default]
    Cumulative,
    /// Only edges after the previous snapshot time.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub theta: f64,
    pub key_nodes: usize,
    pub seed: u64,
    pub window: Window,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { theta: DEFAULT_THETA, key_nodes: DEFAULT_KEY_NODES, seed: 0, window: Window::Cumulative }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub snapshots: Vec<NaiveDate>,
    pub communities: BTreeMap<NaiveDate, Vec<Community>>,
    pub events: Vec<EvolutionEvent>,
}

impl EvolutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Source events of evolutionary edges in `(from, to]` touching any member.
fn drivers(model: &Model, from: NaiveDate, to: NaiveDate, members: &BTreeSet<EntityId>) -> Vec<EventId> {
    let set: BTreeSet<EventId> = model
        .evolutionary()
        .iter()
        .filter(|e| e.timestamp > from && e.timestamp <= to)
        .filter(|e| members.contains(&e.source) || members.contains(&e.destination))
        .map(|e| e.provenance)
        .collect();
    set.into_iter().collect()
}

/// Communities of every snapshot and the events between adjacent ones.
pub fn evolution_report(model: &Model, times: &[NaiveDate], cfg: &EvolutionConfig) -> Result<EvolutionReport, EvolutionError> {
    let snapshots = build_snapshots(model, times)?;
    let per_snapshot: Vec<Vec<Community>> = snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let since = match cfg.window {
                Window::Interval if i > 0 => Some(times[i - 1]),
                _ => None,
            };
            communities_of(&project(s, since), s.at, cfg.seed, cfg.key_nodes)
        })
        .collect();
    let mut events = Vec::new();
    for i in 1..per_snapshot.len() {
        let (prev, next) = (&per_snapshot[i - 1], &per_snapshot[i]);
        let by_id: BTreeMap<&str, &Community> = prev.iter().chain(next).map(|c| (c.id.as_str(), c)).collect();
        for mut ev in classify_events(&align_communities(prev, next, cfg.theta)) {
            let members: BTreeSet<EntityId> =
                ev.before.iter().chain(&ev.after).flat_map(|id| by_id[id.as_str()].members.iter().copied()).collect();
            ev.drivers = drivers(model, times[i - 1], times[i], &members);
            events.push(ev);
        }
    }
    Ok(EvolutionReport {
        snapshots: times.to_vec(),
        communities: times.iter().copied().zip(per_snapshot).collect(),
        events,
    })
}
