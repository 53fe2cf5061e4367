use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::emission::softmax;
use crate::error::ExtractError;
use crate::scalar::Scalar;

pub const NUM_RELATIONS: usize = 5;

/// Floor applied to the gold-class probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Relation between the two sentences of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationLabel {
    Sequential,
    ReverseSequential,
    Unrelated,
    SingleSentence,
    JointEvent,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; NUM_RELATIONS] = [
        RelationLabel::Sequential,
        RelationLabel::ReverseSequential,
        RelationLabel::Unrelated,
        RelationLabel::SingleSentence,
        RelationLabel::JointEvent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for RelationLabel {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| ExtractError::InvalidRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationDistribution<S> {
    pub logits: Array1<S>,
    pub probs: Array1<S>,
}

impl<S: Scalar> RelationDistribution<S> {
    /// Most probable label; ties go to the lower index.
    pub fn argmax(&self) -> RelationLabel {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        RelationLabel::from_index(best).expect("M = 5 outputs")
    }
}

/// Fully connected layer on `[v1; v2]` followed by softmax. `W'` is `2d x M`.
pub fn relation_forward<S: Scalar>(
    v1: ArrayView1<S>,
    v2: ArrayView1<S>,
    w_rel: ArrayView2<S>,
    b_rel: ArrayView1<S>,
) -> Result<RelationDistribution<S>, ExtractError> {
    if v1.len() != v2.len() || w_rel.nrows() != v1.len() + v2.len() || w_rel.ncols() != b_rel.len()
    {
        return Err(ExtractError::Dimension(format!(
            "v1 {}, v2 {}, W' {:?}, b' {}",
            v1.len(),
            v2.len(),
            w_rel.dim(),
            b_rel.len()
        )));
    }
    let u = concatenate(Axis(0), &[v1, v2]).expect("1-d concat");
    let logits = u.dot(&w_rel) + b_rel;
    let probs = softmax(logits.view());
    Ok(RelationDistribution { logits, probs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationLoss<S> {
    pub loss: S,
    /// Gradient with respect to the logits.
    pub d_logits: Array1<S>,
    pub clamped: bool,
}

/// Cross-entropy `-log c_hat[c]`, with the probability floored at 1e-12.
/// A floored sample contributes no gradient.
pub fn relation_loss<S: Scalar>(dist: &RelationDistribution<S>, gold: RelationLabel) -> RelationLoss<S> {
    let p = dist.probs[gold.index()];
    let floor = S::of(PROB_FLOOR);
    if p < floor {
        return RelationLoss {
            loss: -floor.ln(),
            d_logits: Array1::zeros(dist.probs.len()),
            clamped: true,
        };
    }
    let mut d = dist.probs.clone();
    d[gold.index()] -= S::one();
    RelationLoss {
        loss: -p.ln(),
        d_logits: d,
        clamped: false,
    }
}

/// `omega1 * l1 + omega2 * l2`.
pub fn joint_loss<S: Scalar>(l1: S, l2: S, omega1: S, omega2: S) -> S {
    omega1 * l1 + omega2 * l2
}
