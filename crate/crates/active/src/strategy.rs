use std::fmt;
use std::str::FromStr;

use msem_extract::{PairPrediction, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ActiveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One minus the lowest emission probability along the decoded path.
    Ltp,
    /// One minus the lowest per-position maximum probability.
    Mtp,
    /// One minus the CRF probability of the decoded path.
    Lc,
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ltp => "ltp",
            Strategy::Mtp => "mtp",
            Strategy::Lc => "lc",
            Strategy::Random => "random",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ltp" => Ok(Strategy::Ltp),
            "mtp" => Ok(Strategy::Mtp),
            "lc" => Ok(Strategy::Lc),
            "random" => Ok(Strategy::Random),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub sample_id: u64,
    pub phi: f64,
    pub strategy: Strategy,
}

fn non_empty<S: Scalar>(
    id: u64,
    pred: &PairPrediction<S>,
) -> Result<Vec<&msem_extract::SentencePrediction<S>>, ActiveError> {
    let v: Vec<_> = [&pred.first, &pred.second]
        .into_iter()
        .filter(|s| !s.tags.is_empty())
        .collect();
    if v.is_empty() {
        return Err(ActiveError::EmptyPair(id));
    }
    Ok(v)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn score_ltp<S: Scalar>(id: u64, pred: &PairPrediction<S>) -> Result<f64, ActiveError> {
    let min = non_empty(id, pred)?
        .iter()
        .flat_map(|s| s.path_token_probs())
        .map(|p| p.as_f64())
        .fold(f64::INFINITY, f64::min);
    Ok(clamp01(1.0 - min))
}

pub fn score_mtp<S: Scalar>(id: u64, pred: &PairPrediction<S>) -> Result<f64, ActiveError> {
    let min = non_empty(id, pred)?
        .iter()
        .flat_map(|s| {
            s.probs
                .rows()
                .into_iter()
                .map(|r| r.iter().fold(f64::NEG_INFINITY, |m, &p| m.max(p.as_f64())))
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(clamp01(1.0 - min))
}

pub fn score_lc<S: Scalar>(id: u64, pred: &PairPrediction<S>) -> Result<f64, ActiveError> {
    let phi = non_empty(id, pred)?
        .iter()
        .map(|s| 1.0 - s.path_probability().as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(clamp01(phi))
}

/// Uniform score from a stream keyed by `(seed, round, id)`.
pub fn score_random(seed: u64, round: usize, id: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((round as u64) << 40));
    rng.set_stream(id);
    rng.random::<f64>()
}

/// Top `min(b, n)` ids by descending score, ties by ascending id.
pub fn select_batch(scores: &[SelectionScore], b: usize) -> Result<Vec<u64>, ActiveError> {
    if scores.is_empty() {
        return Err(ActiveError::EmptyPool);
    }
    let mut sorted: Vec<&SelectionScore> = scores.iter().collect();
    sorted.sort_by(|a, c| c.phi.total_cmp(&a.phi).then(a.sample_id.cmp(&c.sample_id)));
    Ok(sorted.into_iter().take(b).map(|s| s.sample_id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use msem_extract::tags::NUM_TAGS;
    use msem_extract::{RelationDistribution, SentencePrediction, Tag};
    use ndarray::{Array1, Array2};

    fn sentence(rows: &[&[(usize, f64)]], path: &[usize]) -> SentencePrediction<f64> {
        let mut probs = Array2::zeros((rows.len(), NUM_TAGS));
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row.iter() {
                probs[[i, j]] = p;
            }
        }
        SentencePrediction {
            tags: path.iter().map(|&t| Tag::from_index(t).unwrap()).collect(),
            probs,
            path_score: 0.0,
            log_z: 0.0,
        }
    }

    fn pair(first: SentencePrediction<f64>) -> PairPrediction<f64> {
        PairPrediction {
            first,
            second: sentence(&[], &[]),
            relation: RelationDistribution { logits: Array1::zeros(5), probs: Array1::from_elem(5, 0.2) },
        }
    }

    #[test]
    fn ltp_uses_the_decoded_path() {
        let s = sentence(&[&[(0, 0.9), (1, 0.1)], &[(0, 0.4), (1, 0.6)], &[(0, 0.8), (1, 0.2)]], &[0, 1, 0]);
        assert!((score_ltp(1, &pair(s.clone())).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(score_ltp(1, &pair(s.clone())).unwrap(), score_mtp(1, &pair(s.clone())).unwrap());
        // path 0,0,0 takes prob 0.4 at the middle position; MTP ignores the path
        let mut off = s;
        off.tags[1] = Tag::O;
        assert!((score_ltp(1, &pair(off.clone())).unwrap() - 0.6).abs() < 1e-12);
        assert!((score_mtp(1, &pair(off)).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mtp_of_documented_rows() {
        let s = sentence(&[&[(0, 0.9)], &[(0, 0.7)], &[(2, 0.95)]], &[0, 0, 2]);
        assert!((score_mtp(1, &pair(s)).unwrap() - 0.3).abs() < 1e-12);
        let uniform = SentencePrediction {
            tags: vec![Tag::O],
            probs: Array2::from_elem((1, NUM_TAGS), 1.0 / 16.0),
            path_score: 0.0,
            log_z: 0.0,
        };
        assert!((score_mtp(1, &pair(uniform)).unwrap() - 15.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn lc_of_the_worked_crf_case() {
        let z: f64 = [1.1f64, 1.7, 0.3, 0.9].iter().map(|s| s.exp()).sum();
        let s = SentencePrediction {
            tags: vec![Tag::O, Tag::O],
            probs: Array2::zeros((2, NUM_TAGS)),
            path_score: 1.7,
            log_z: z.ln(),
        };
        assert!((score_lc(1, &pair(s)).unwrap() - 0.5545).abs() < 1e-4);
    }

    #[test]
    fn empty_pair_is_rejected() {
        assert!(score_ltp(7, &pair(sentence(&[], &[]))).is_err());
    }

    #[test]
    fn selection_order_and_ties() {
        let mk = |id, phi| SelectionScore { sample_id: id, phi, strategy: Strategy::Ltp };
        let scores = [mk(1, 0.2), mk(3, 0.9), mk(2, 0.9)];
        assert_eq!(select_batch(&scores, 2).unwrap(), vec![2, 3]);
        assert_eq!(select_batch(&scores, 10).unwrap().len(), 3);
        assert!(select_batch(&[], 2).is_err());
    }

    #[test]
    fn random_scores_are_reproducible_and_bounded() {
        assert_eq!(score_random(1, 2, 3), score_random(1, 2, 3));
        assert_ne!(score_random(1, 2, 3), score_random(1, 3, 3));
        assert!((0..100).all(|i| (0.0..1.0).contains(&score_random(5, 0, i))));
    }
}
