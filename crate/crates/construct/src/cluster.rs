//! TF-IDF k-means over event titles, for grouping events no rule matched.

use std::collections::BTreeMap;

use msem_core::text::normalize;
use msem_core::EventId;
use msem_extract::tokenize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_K: usize = 10;
const MAX_ITERATIONS: usize = 100;
const TOP_TERMS: usize = 5;
const RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedCluster {
    pub cluster_id: usize,
    pub members: Vec<EventId>,
    /// Highest-weighted centroid terms.
    pub terms: Vec<String>,
}

type Vector = Vec<f64>;

fn tfidf(docs: &[Vec<String>]) -> (Vec<String>, Vec<Vector>) {
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in d {
            vocab.entry(t).or_insert(0);
        }
    }
    for (i, v) in vocab.values_mut().enumerate() {
        *v = i;
    }
    let mut df = vec![0usize; vocab.len()];
    for d in docs {
        let mut seen: Vec<usize> = d.iter().map(|t| vocab[t.as_str()]).collect();
        seen.sort_unstable();
        seen.dedup();
        for i in seen {
            df[i] += 1;
        }
    }
    let n = docs.len() as f64;
    let vectors = docs
        .iter()
        .map(|d| {
            let mut v = vec![0.0; vocab.len()];
            for t in d {
                v[vocab[t.as_str()]] += 1.0;
            }
            for (i, x) in v.iter_mut().enumerate() {
                *x *= ((1.0 + n) / (1.0 + df[i] as f64)).ln() + 1.0;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v
        })
        .collect();
    (vocab.keys().map(|s| s.to_string()).collect(), vectors)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vector]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding; stops early when every remaining point coincides
/// with a chosen centre.
fn seed_centroids(points: &[Vector], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        if total <= 1e-12 {
            break;
        }
        let mut r = rng.random::<f64>() * total;
        let mut pick = d.iter().rposition(|&x| x > 0.0).expect("positive total");
        for (i, &x) in d.iter().enumerate() {
            if x > 0.0 && r < x {
                pick = i;
                break;
            }
            r -= x;
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

fn lloyd(points: &[Vector], mut centroids: Vec<Vector>) -> (Vec<usize>, Vec<Vector>, f64) {
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assign {
            break;
        }
        assign = next;
        for (j, c) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vector> = points.iter().zip(&assign).filter(|(_, &a)| a == j).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for (i, x) in c.iter_mut().enumerate() {
                *x = members.iter().map(|m| m[i]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    let inertia = points.iter().zip(&assign).map(|(p, &a)| dist2(p, &centroids[a])).sum();
    (assign, centroids, inertia)
}

/// Clusters `(event, title)` pairs into at most `k` groups (clamped to the
/// number of events), ordered by descending size then smallest member id.
/// The best of several seeded restarts (lowest inertia) is kept.
pub fn cluster_unmatched(events: &[(EventId, String)], k: usize, seed: u64) -> Vec<UnmatchedCluster> {
    if events.is_empty() || k == 0 {
        return Vec::new();
    }
    let docs: Vec<Vec<String>> = events
        .iter()
        .map(|(_, t)| tokenize(t).iter().map(|w| normalize(w)).filter(|w| w.chars().any(char::is_alphanumeric)).collect())
        .collect();
    let (vocab, points) = tfidf(&docs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<Vector>, f64)> = None;
    for _ in 0..RESTARTS {
        let run = lloyd(&points, seed_centroids(&points, k.min(events.len()), &mut rng));
        if best.as_ref().is_none_or(|b| run.2 < b.2 - 1e-12) {
            best = Some(run);
        }
    }
    let (assign, centroids, _) = best.expect("at least one restart");
    let mut groups: Vec<(Vec<EventId>, &Vector)> = centroids
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut m: Vec<EventId> = events.iter().zip(&assign).filter(|(_, &a)| a == j).map(|((e, _), _)| *e).collect();
            m.sort();
            (m, c)
        })
        .filter(|(m, _)| !m.is_empty())
        .collect();
    groups.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0[0].cmp(&b.0[0])));
    groups
        .into_iter()
        .enumerate()
        .map(|(cluster_id, (members, c))| {
            let mut w: Vec<(usize, f64)> = c.iter().copied().enumerate().filter(|(_, x)| *x > 0.0).collect();
            w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            UnmatchedCluster {
                cluster_id,
                members,
                terms: w.iter().take(TOP_TERMS).map(|(i, _)| vocab[*i].clone()).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<(EventId, String)> {
        (0..20)
            .map(|i| {
                let t = if i % 2 == 0 { "Acme raises funding round" } else { "Globex opens new office" };
                (EventId(i), t.to_string())
            })
            .collect()
    }

    #[test]
    fn separable_titles_split_cleanly() {
        let c = cluster_unmatched(&corpus(), 2, 7);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].members.len(), 10);
        assert_eq!(c[1].members.len(), 10);
        assert!(c[0].members.iter().all(|e| e.0 % 2 == 0));
        assert!(c[0].terms.contains(&"funding".to_string()));
    }

    #[test]
    fn boundaries_and_determinism() {
        let one = cluster_unmatched(&corpus(), 1, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].members.len(), 20);
        assert_eq!(cluster_unmatched(&corpus()[..3], 10, 1).iter().map(|c| c.members.len()).sum::<usize>(), 3);
        assert_eq!(cluster_unmatched(&corpus(), 4, 3), cluster_unmatched(&corpus(), 4, 3));
        assert!(cluster_unmatched(&[], 3, 1).is_empty());
    }
}
