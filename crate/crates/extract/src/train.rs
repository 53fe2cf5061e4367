use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ExtractError;
use crate::model::{Grads, JointModel, ModelConfig, PreparedPair};
use crate::optim::{Adam, AdamConfig};
use crate::sample::TrainingSample;
use crate::scalar::Scalar;
use crate::tags::{decode_spans, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 40,
            adam: AdamConfig::default(),
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample joint loss for each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub clamped: usize,
}

fn sample_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

/// Trains `model` in place on `samples`.
///
/// Per-sample gradients within a batch are computed in parallel and then
/// summed in sample order, so results depend only on the seed.
pub fn train<S: Scalar>(
    model: &mut JointModel<S>,
    samples: &[TrainingSample],
    config: &TrainConfig,
) -> Result<TrainReport, ExtractError> {
    if samples.is_empty() {
        return Err(ExtractError::NoSamples);
    }
    if config.batch_size == 0 {
        return Err(ExtractError::Config("batch_size must be >= 1".into()));
    }
    let prepared = samples
        .iter()
        .map(|s| s.prepare(&model.config))
        .collect::<Result<Vec<_>, _>>()?;
    train_prepared(model, &prepared, config)
}

pub fn train_prepared<S: Scalar>(
    model: &mut JointModel<S>,
    prepared: &[PreparedPair],
    config: &TrainConfig,
) -> Result<TrainReport, ExtractError> {
    if prepared.is_empty() {
        return Err(ExtractError::NoSamples);
    }
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(config.adam, &model.params);
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        steps: 0,
        clamped: 0,
    };
    let d = model.d();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffler);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let m = &*model;
            let results = batch
                .par_iter()
                .map(|&i| {
                    let mut rng = sample_rng(config.seed, epoch, i);
                    m.loss_and_grad(&prepared[i], Some(&mut rng))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let inv = S::one() / S::of(batch.len() as f64);
            let mut grads = Grads::zeros(d);
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                grads.add_scaled(g, inv);
                batch_loss += loss.total.as_f64();
                report.clamped += loss.clamped as usize;
            }
            if !batch_loss.is_finite() {
                return Err(ExtractError::Divergence {
                    epoch,
                    batch: batch_no,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss;
            adam.step(&mut model.params, &grads);
            if !model.params.is_finite() {
                return Err(ExtractError::Divergence {
                    epoch,
                    batch: batch_no,
                    loss: f64::NAN,
                });
            }
        }
        report.epoch_losses.push(epoch_loss / prepared.len() as f64);
    }
    report.steps = adam.steps();
    Ok(report)
}

/// Held-out quality measures.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of tokens whose decoded tag equals the gold tag.
    pub token_accuracy: f64,
    /// Fraction of non-blank sentences whose decoded span set equals the
    /// gold span set exactly.
    pub exact_event_accuracy: f64,
    pub relation_accuracy: f64,
    pub tokens: usize,
    pub sentences: usize,
    pub pairs: usize,
}

pub fn evaluate<S: Scalar>(
    model: &JointModel<S>,
    samples: &[TrainingSample],
) -> Result<Metrics, ExtractError> {
    if samples.is_empty() {
        return Err(ExtractError::NoSamples);
    }
    let outcomes = samples
        .par_iter()
        .map(|s| {
            let pr = s.prepare(&model.config)?;
            let pred = model.predict(&pr)?;
            let mut tok = (0usize, 0usize);
            let mut sent = (0usize, 0usize);
            for (p, gold) in [(&pred.first, &s.y1), (&pred.second, &s.y2)] {
                if gold.is_empty() {
                    continue;
                }
                let gold: &[Tag] = &gold[..p.tags.len()];
                tok.0 += p.tags.iter().zip(gold).filter(|(a, b)| a == b).count();
                tok.1 += gold.len();
                let spans = |t: &[Tag]| decode_spans(t).0.into_iter().collect::<BTreeSet<_>>();
                sent.0 += (spans(&p.tags) == spans(gold)) as usize;
                sent.1 += 1;
            }
            Ok((tok, sent, (pred.relation_label() == s.c) as usize))
        })
        .collect::<Result<Vec<_>, ExtractError>>()?;
    let mut m = Metrics {
        pairs: samples.len(),
        ..Metrics::default()
    };
    let (mut tc, mut sc, mut rc) = (0, 0, 0);
    for (tok, sent, rel) in outcomes {
        tc += tok.0;
        m.tokens += tok.1;
        sc += sent.0;
        m.sentences += sent.1;
        rc += rel;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    m.token_accuracy = ratio(tc, m.tokens);
    m.exact_event_accuracy = ratio(sc, m.sentences);
    m.relation_accuracy = ratio(rc, m.pairs);
    Ok(m)
}

/// Builds a fresh model from `config` and trains it.
pub fn fit<S: Scalar>(
    samples: &[TrainingSample],
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<(JointModel<S>, TrainReport), ExtractError> {
    let mut model = JointModel::new(model_config)?;
    let report = train(&mut model, samples, config)?;
    Ok((model, report))
}
