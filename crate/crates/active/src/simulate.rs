//! Simulated-annotator runs over a labelled corpus.

use msem_extract::{evaluate, Scalar, TrainingSample};
use serde::{Deserialize, Serialize};

use crate::error::ActiveError;
use crate::learner::{ActiveLearner, LoopConfig, SimulatedOracle};
use crate::pool::{Pool, RawPair};

/// Pool whose first `initial` samples start labeled; ids are corpus indices.
/// The oracle holds gold labels for the rest.
pub fn simulated_pool(
    samples: &[TrainingSample],
    initial: usize,
) -> Result<(Pool, SimulatedOracle), ActiveError> {
    let mut pool = Pool::new();
    let mut oracle = SimulatedOracle::default();
    for (i, s) in samples.iter().enumerate() {
        let id = i as u64;
        if i < initial {
            pool.insert_labeled(id, s.clone())?;
        } else {
            pool.insert_unlabeled(id, RawPair::from(s))?;
            oracle.gold.insert(id, s.clone());
        }
    }
    Ok((pool, oracle))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub labeled: usize,
    pub token_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    /// Labeled-set size at the first point reaching the target, if any.
    pub labeled_at_target: Option<usize>,
}

/// Retrains after every batch and records held-out token accuracy until it
/// reaches `target` or the loop's stop condition holds.
pub fn learning_curve<S: Scalar>(
    pool: Pool,
    mut oracle: SimulatedOracle,
    config: LoopConfig,
    held_out: &[TrainingSample],
    target: f64,
) -> Result<Curve, ActiveError> {
    let mut learner = ActiveLearner::<S>::new(pool, config);
    let mut points = Vec::new();
    loop {
        learner.train()?;
        let model = learner.model().expect("trained above");
        let acc = evaluate(model, held_out)?.token_accuracy;
        let labeled = learner.pool().labeled().len();
        points.push(CurvePoint { labeled, token_accuracy: acc });
        if acc >= target {
            return Ok(Curve { points, labeled_at_target: Some(labeled) });
        }
        if learner.stop_reason().is_some() {
            return Ok(Curve { points, labeled_at_target: None });
        }
        learner.propose()?;
        let batch = learner.pending().expect("just proposed").clone();
        let labels = crate::learner::Annotator::annotate(&mut oracle, &batch).map_err(ActiveError::Annotator)?;
        learner.submit(labels)?;
    }
}
