//! Louvain modularity optimization with a seeded, reproducible visiting order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

const MIN_GAIN: f64 = 1e-12;

struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        Level {
            adj: (0..g.len()).map(|i| g.neighbors(i).collect()).collect(),
            loops: vec![0.0; g.len()],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.loops[i]
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut adj = vec![BTreeMap::<usize, f64>::new(); k];
        let mut loops = vec![0.0; k];
        for i in 0..self.len() {
            loops[comm[i]] += self.loops[i];
            for &(j, w) in &self.adj[i] {
                if comm[i] == comm[j] {
                    loops[comm[i]] += w / 2.0;
                } else {
                    *adj[comm[i]].entry(comm[j]).or_default() += w;
                }
            }
        }
        Level {
            adj: adj.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
        }
    }

    /// Local moving until no node improves; returns compacted labels.
    fn local_moves(&self, two_m: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let n = self.len();
        let k: Vec<f64> = (0..n).map(|i| self.degree(i)).collect();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = k.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        loop {
            let mut moved = false;
            for &i in &order {
                let own = comm[i];
                let mut links = BTreeMap::<usize, f64>::new();
                for &(j, w) in &self.adj[i] {
                    *links.entry(comm[j]).or_default() += w;
                }
                tot[own] -= k[i];
                let gain = |c: usize| links.get(&c).copied().unwrap_or(0.0) - tot[c] * k[i] / two_m;
                let (mut best, mut best_gain) = (own, gain(own));
                for &c in links.keys() {
                    let g = gain(c);
                    if g > best_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += k[i];
                comm[i] = best;
                moved |= best != own;
            }
            if !moved {
                break;
            }
        }
        compact(&comm)
    }
}

/// Relabels communities `0..k` in order of first appearance.
fn compact(labels: &[usize]) -> Vec<usize> {
    let mut seen = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = seen.len();
            *seen.entry(l).or_insert(next)
        })
        .collect()
}

/// Community label per node, numbered by each community's first node.
pub fn louvain(g: &Graph, seed: u64) -> Vec<usize> {
    let n = g.len();
    let two_m = 2.0 * g.total_weight();
    let mut membership: Vec<usize> = (0..n).collect();
    if two_m == 0.0 {
        return membership;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = Level::from_graph(g);
    loop {
        let comm = level.local_moves(two_m, &mut rng);
        let k = comm.iter().max().map_or(0, |&c| c + 1);
        if k == level.len() {
            break;
        }
        for m in &mut membership {
            *m = comm[*m];
        }
        level = level.aggregate(&comm, k);
    }
    compact(&membership)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::modularity;
    use msem_core::EntityId;

    fn two_cliques() -> Graph {
        let ids: Vec<EntityId> = (0..8).map(EntityId).collect();
        let mut g = Graph::new(ids.clone());
        for base in [0, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    g.add_edge(ids[base + a], ids[base + b], 1.0);
                }
            }
        }
        g.add_edge(ids[3], ids[4], 1.0);
        g
    }

    #[test]
    fn recovers_the_two_cliques() {
        let g = two_cliques();
        for seed in 0..20 {
            assert_eq!(louvain(&g, seed), vec![0, 0, 0, 0, 1, 1, 1, 1], "seed {seed}");
        }
        let q = modularity(&g, &louvain(&g, 0));
        assert!((q - (24.0 / 26.0 - 2.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn edgeless_graph_is_all_singletons() {
        let g = Graph::new((0..5).map(EntityId));
        assert_eq!(louvain(&g, 3), vec![0, 1, 2, 3, 4]);
        assert!(louvain(&Graph::default(), 3).is_empty());
    }
}
