//! The pool-based loop: train on the labeled side, score the unlabeled
//! side, hand the top batch to an annotator, fold the answers back in.

use std::collections::{BTreeMap, BTreeSet};

use msem_extract::{
    train, JointModel, ModelConfig, PairPrediction, RelationLabel, Scalar, TrainConfig, TrainReport,
    TrainingSample,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{annotation_cost, triples, CostReport, CostRow};
use crate::error::ActiveError;
use crate::pool::{Pool, RawPair};
use crate::strategy::{score_lc, score_ltp, score_mtp, score_random, select_batch, SelectionScore, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCondition {
    pub max_iterations: Option<usize>,
    /// Stop once a batch's mean annotation cost falls below this.
    pub cost_below: Option<f64>,
}

impl Default for StopCondition {
    fn default() -> Self {
        StopCondition {
            max_iterations: Some(17),
            cost_below: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    PoolExhausted,
    CostThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub strategy: Strategy,
    pub batch_size: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub stop: StopCondition,
    /// Continue from the previous round's parameters instead of retraining
    /// from the initial state.
    pub warm_start: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            strategy: Strategy::Ltp,
            batch_size: 50,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            stop: StopCondition::default(),
            warm_start: false,
        }
    }
}

/// Samples handed to the annotator, with the model's pre-annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingBatch {
    pub iteration: usize,
    pub scores: Vec<SelectionScore>,
    pub pre_annotations: Vec<(u64, TrainingSample)>,
}

impl PendingBatch {
    pub fn ids(&self) -> Vec<u64> {
        self.pre_annotations.iter().map(|(id, _)| *id).collect()
    }
}

pub trait Annotator {
    /// Corrected labels for every sample of `batch`.
    fn annotate(&mut self, batch: &PendingBatch) -> Result<Vec<(u64, TrainingSample)>, String>;
}

/// Answers with stored gold labels.
#[derive(Debug, Clone, Default)]
pub struct SimulatedOracle {
    pub gold: BTreeMap<u64, TrainingSample>,
}

impl Annotator for SimulatedOracle {
    fn annotate(&mut self, batch: &PendingBatch) -> Result<Vec<(u64, TrainingSample)>, String> {
        batch
            .ids()
            .into_iter()
            .map(|id| {
                self.gold
                    .get(&id)
                    .cloned()
                    .map(|s| (id, s))
                    .ok_or_else(|| format!("no gold label for sample {id}"))
            })
            .collect()
    }
}

fn pre_annotation<S: Scalar>(pair: &RawPair, pred: &PairPrediction<S>) -> TrainingSample {
    let c = if pair.x2.is_empty() {
        RelationLabel::SingleSentence
    } else {
        pred.relation_label()
    };
    let pad = |tags: &[msem_extract::Tag], n: usize| {
        let mut t = tags.to_vec();
        t.resize(n, msem_extract::Tag::O);
        t
    };
    TrainingSample {
        c,
        x1: pair.x1.clone(),
        x2: pair.x2.clone(),
        y1: pad(&pred.first.tags, pair.x1.len()),
        y2: pad(&pred.second.tags, pair.x2.len()),
    }
}

#[derive(Debug, Clone)]
pub struct ActiveLearner<S> {
    pub config: LoopConfig,
    pool: Pool,
    model: Option<JointModel<S>>,
    pending: Option<PendingBatch>,
    report: CostReport,
    iteration: usize,
    last_cost: Option<f64>,
}

impl<S: Scalar> ActiveLearner<S> {
    pub fn new(pool: Pool, config: LoopConfig) -> Self {
        ActiveLearner {
            config,
            pool,
            model: None,
            pending: None,
            report: CostReport::default(),
            iteration: 0,
            last_cost: None,
        }
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn model(&self) -> Option<&JointModel<S>> {
        self.model.as_ref()
    }

    pub fn pending(&self) -> Option<&PendingBatch> {
        self.pending.as_ref()
    }

    pub fn report(&self) -> &CostReport {
        &self.report
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn train(&mut self) -> Result<TrainReport, ActiveError> {
        let samples: Vec<TrainingSample> = self.pool.labeled().values().cloned().collect();
        let mut model = match (&self.model, self.config.warm_start) {
            (Some(m), true) => m.clone(),
            _ => JointModel::new(self.config.model)?,
        };
        let report = train(&mut model, &samples, &self.config.train)?;
        self.model = Some(model);
        Ok(report)
    }

    pub fn score_pool(&self) -> Result<Vec<SelectionScore>, ActiveError> {
        let strategy = self.config.strategy;
        let seed = self.config.train.seed;
        let round = self.iteration;
        let unlabeled: Vec<(&u64, &RawPair)> = self.pool.unlabeled().iter().collect();
        if strategy == Strategy::Random {
            return Ok(unlabeled
                .iter()
                .map(|(&id, _)| SelectionScore {
                    sample_id: id,
                    phi: score_random(seed, round, id),
                    strategy,
                })
                .collect());
        }
        let model = self.model.as_ref().ok_or(ActiveError::NotTrained)?;
        unlabeled
            .par_iter()
            .map(|(&id, pair)| {
                let pred = model.predict_tokens(&pair.x1, &pair.x2)?;
                let phi = match strategy {
                    Strategy::Ltp => score_ltp(id, &pred)?,
                    Strategy::Mtp => score_mtp(id, &pred)?,
                    Strategy::Lc => score_lc(id, &pred)?,
                    Strategy::Random => unreachable!("handled above"),
                };
                Ok(SelectionScore {
                    sample_id: id,
                    phi,
                    strategy,
                })
            })
            .collect()
    }

    /// Scores the pool and holds the top batch until [`Self::submit`].
    /// Requires a trained model (random selection still pre-annotates).
    pub fn propose(&mut self) -> Result<&PendingBatch, ActiveError> {
        if self.pending.is_some() {
            return Err(ActiveError::BatchPending);
        }
        let model = self.model.as_ref().ok_or(ActiveError::NotTrained)?;
        let scores = self.score_pool()?;
        let ids = select_batch(&scores, self.config.batch_size)?;
        let by_id: BTreeMap<u64, SelectionScore> = scores.into_iter().map(|s| (s.sample_id, s)).collect();
        let pre_annotations = ids
            .iter()
            .map(|id| {
                let pair = &self.pool.unlabeled()[id];
                let pred = model.predict_tokens(&pair.x1, &pair.x2)?;
                Ok((*id, pre_annotation(pair, &pred)))
            })
            .collect::<Result<Vec<_>, ActiveError>>()?;
        self.pending = Some(PendingBatch {
            iteration: self.iteration + 1,
            scores: ids.iter().map(|id| by_id[id]).collect(),
            pre_annotations,
        });
        Ok(self.pending.as_ref().expect("just set"))
    }

    /// Drops the pending batch, leaving the pool as it was.
    pub fn cancel(&mut self) {
        self.pending = None;
    }

    /// Accepts corrected labels for exactly the pending ids, moves them into
    /// the labeled side and records the batch's mean annotation cost.
    pub fn submit(&mut self, labels: Vec<(u64, TrainingSample)>) -> Result<CostRow, ActiveError> {
        let pending = self.pending.as_ref().ok_or(ActiveError::NoPendingBatch)?;
        let want: BTreeSet<u64> = pending.ids().into_iter().collect();
        let got: BTreeSet<u64> = labels.iter().map(|(id, _)| *id).collect();
        if want != got || labels.len() != want.len() {
            return Err(ActiveError::BatchMismatch(format!(
                "expected ids {want:?}, got {:?}",
                labels.iter().map(|(id, _)| *id).collect::<Vec<_>>()
            )));
        }
        let mut labels = labels;
        for (id, s) in labels.iter_mut() {
            s.normalize()
                .map_err(|e| ActiveError::BatchMismatch(format!("sample {id}: {e}")))?;
            let raw = &self.pool.unlabeled()[id];
            if s.x1 != raw.x1 || s.x2 != raw.x2 {
                return Err(ActiveError::BatchMismatch(format!(
                    "sample {id}: tokens differ from the pool"
                )));
            }
        }
        let pre: BTreeMap<u64, &TrainingSample> =
            pending.pre_annotations.iter().map(|(id, s)| (*id, s)).collect();
        let (mut cost, mut tr_len) = (0usize, 0usize);
        for (id, s) in &labels {
            let p = pre[id];
            let tr = triples(&s.y1, &s.y2, s.c);
            cost += annotation_cost(&triples(&p.y1, &p.y2, p.c), &tr);
            tr_len += tr.len();
        }
        let n = labels.len().max(1) as f64;
        let row = CostRow {
            iteration: pending.iteration,
            mean_cost: cost as f64 / n,
            mean_tr_len: tr_len as f64 / n,
        };
        self.pool.label_all(labels)?;
        self.pending = None;
        self.iteration = row.iteration;
        self.last_cost = Some(row.mean_cost);
        self.report.rows.push(row);
        Ok(row)
    }

    /// One full round. On annotator failure the batch is dropped and the
    /// pool is left untouched.
    pub fn run_iteration(&mut self, annotator: &mut dyn Annotator) -> Result<CostRow, ActiveError> {
        self.train()?;
        let batch = self.propose()?.clone();
        let labels = match annotator.annotate(&batch) {
            Ok(l) => l,
            Err(e) => {
                self.cancel();
                return Err(ActiveError::Annotator(e));
            }
        };
        self.submit(labels).inspect_err(|_| self.cancel())
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        if self.pool.is_exhausted() {
            return Some(StopReason::PoolExhausted);
        }
        if matches!(self.config.stop.max_iterations, Some(m) if self.iteration >= m) {
            return Some(StopReason::IterationBudget);
        }
        match (self.config.stop.cost_below, self.last_cost) {
            (Some(t), Some(c)) if c < t => Some(StopReason::CostThreshold),
            _ => None,
        }
    }

    /// Iterates until a stop condition holds.
    pub fn run(&mut self, annotator: &mut dyn Annotator) -> Result<StopReason, ActiveError> {
        loop {
            if let Some(r) = self.stop_reason() {
                return Ok(r);
            }
            self.run_iteration(annotator)?;
        }
    }
}
