//! Undirected weighted graph over stakeholders, projected from a snapshot.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use msem_core::{EntityId, Layer, ModelSnapshot};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Graph {
    nodes: Vec<EntityId>,
    position: BTreeMap<EntityId, usize>,
    adj: Vec<BTreeMap<usize, f64>>,
}

impl Graph {
    pub fn new(nodes: impl IntoIterator<Item = EntityId>) -> Self {
        let mut g = Graph::default();
        for n in nodes {
            g.add_node(n);
        }
        g
    }

    pub fn add_node(&mut self, n: EntityId) -> usize {
        if let Some(&i) = self.position.get(&n) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(n);
        self.position.insert(n, i);
        self.adj.push(BTreeMap::new());
        i
    }

    /// Adds `w` to the edge between `a` and `b`; self-loops are ignored.
    pub fn add_edge(&mut self, a: EntityId, b: EntityId, w: f64) {
        let (i, j) = (self.add_node(a), self.add_node(b));
        if i == j {
            return;
        }
        *self.adj[i].entry(j).or_default() += w;
        *self.adj[j].entry(i).or_default() += w;
    }

    pub fn nodes(&self) -> &[EntityId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, n: EntityId) -> Option<usize> {
        self.position.get(&n).copied()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[i].iter().map(|(&j, &w)| (j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i].get(&j).copied().unwrap_or(0.0)
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].values().sum()
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.len()).map(|i| self.degree(i)).sum::<f64>() / 2.0
    }
}

/// Modularity of a node-to-community assignment.
pub fn modularity(g: &Graph, community: &[usize]) -> f64 {
    let m = g.total_weight();
    if m == 0.0 {
        return 0.0;
    }
    let k = community.iter().max().map_or(0, |&c| c + 1);
    let mut internal = vec![0.0; k];
    let mut total = vec![0.0; k];
    for i in 0..g.len() {
        total[community[i]] += g.degree(i);
        for (j, w) in g.neighbors(i) {
            if community[i] == community[j] {
                internal[community[i]] += w;
            }
        }
    }
    (0..k)
        .map(|c| internal[c] / (2.0 * m) - (total[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Stakeholder graph of a snapshot: one unit of weight per evolutionary edge
/// between two distinct stakeholders. With `since`, only edges stamped after
/// it count, which turns the cumulative snapshot into an interval view.
pub fn project(snapshot: &ModelSnapshot<'_>, since: Option<NaiveDate>) -> Graph {
    let is_stakeholder = |id: EntityId| {
        snapshot
            .entities
            .get(id.0 as usize)
            .is_some_and(|e| e.layer() == Layer::Stakeholder)
    };
    let mut edges: Vec<(EntityId, EntityId)> = snapshot
        .evolutionary
        .iter()
        .filter(|e| since.is_none_or(|s| e.timestamp > s))
        .filter(|e| e.source != e.destination && is_stakeholder(e.source) && is_stakeholder(e.destination))
        .map(|e| (e.source.min(e.destination), e.source.max(e.destination)))
        .collect();
    edges.sort();
    let mut nodes: Vec<EntityId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    nodes.sort();
    nodes.dedup();
    let mut g = Graph::new(nodes);
    for (a, b) in edges {
        g.add_edge(a, b, 1.0);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_accumulate_symmetrically() {
        let mut g = Graph::new([EntityId(3), EntityId(1)]);
        g.add_edge(EntityId(1), EntityId(3), 1.0);
        g.add_edge(EntityId(3), EntityId(1), 2.0);
        g.add_edge(EntityId(3), EntityId(3), 5.0);
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.weight(1, 0), 3.0);
        assert_eq!(g.total_weight(), 3.0);
    }

    #[test]
    fn single_community_of_a_clique_has_zero_modularity() {
        let ids: Vec<EntityId> = (0..4).map(EntityId).collect();
        let mut g = Graph::new(ids.clone());
        for a in 0..4 {
            for b in a + 1..4 {
                g.add_edge(ids[a], ids[b], 1.0);
            }
        }
        assert!(modularity(&g, &[0, 0, 0, 0]).abs() < 1e-12);
        assert!(modularity(&g, &[0, 1, 2, 3]) < 0.0);
    }
}
