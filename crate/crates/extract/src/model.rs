//! Joint model: shared encoder, per-token emission head feeding a CRF, and a
//! sentence-pair relation head.
//!
//! Each sentence is decoded over the lattice `[CLS] tokens [SEP]`. The two
//! marker positions carry zero unaries and admit only their own tag;
//! interior positions admit `O` and the twelve BIO tags. `[PAD]` is never a
//! lattice state.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::crf::{crf_nll_grad_masked, viterbi_decode_masked, TagMask};
use crate::emission::{emissions, softmax_backward};
use crate::encoder::{self, EncoderConfig, SparseRows, TokenFeatures};
use crate::error::ExtractError;
use crate::relation::{relation_forward, relation_loss, RelationDistribution, RelationLabel, NUM_RELATIONS};
use crate::scalar::Scalar;
use crate::tags::{decode_spans, Repair, Span, Tag, IMPOSSIBLE, NUM_TAGS};

const CLS: usize = 13;
const SEP: usize = 14;
/// Interior lattice states are tag indices `0..INTERIOR`.
const INTERIOR: usize = 13;

/// What the CRF uses as per-position unary potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potentials {
    /// Softmax probabilities `h`.
    #[default]
    Probability,
    /// Raw emission scores `z`.
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub potentials: Potentials,
    pub omega1: f64,
    pub omega2: f64,
    pub dropout: f64,
    pub max_seq_length: usize,
    /// Standard deviation of the embedding table at initialization.
    pub embedding_init_std: f64,
    /// Standard deviation of both head weight matrices at initialization;
    /// `0` starts them at zero.
    pub head_init_std: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            potentials: Potentials::Probability,
            omega1: 1.0,
            omega2: 1.0,
            dropout: 0.25,
            max_seq_length: 128,
            embedding_init_std: 1.0,
            head_init_std: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        self.encoder.validate()?;
        if !(self.omega1 >= 0.0 && self.omega2 >= 0.0) {
            return Err(ExtractError::Config("loss weights must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ExtractError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.max_seq_length < 3 {
            return Err(ExtractError::Config("max_seq_length must be >= 3".into()));
        }
        if self.embedding_init_std.is_nan() || self.embedding_init_std <= 0.0 {
            return Err(ExtractError::Config("embedding_init_std must be > 0".into()));
        }
        if self.head_init_std.is_nan() || self.head_init_std < 0.0 {
            return Err(ExtractError::Config("head_init_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Tokens kept per sentence once the two markers are added.
    pub fn max_tokens(&self) -> usize {
        self.max_seq_length - 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params<S> {
    pub embeddings: Array2<S>,
    /// `d x K`
    pub w: Array2<S>,
    pub b: Array1<S>,
    /// `2d x M`
    pub w_rel: Array2<S>,
    pub b_rel: Array1<S>,
    /// `K x K` transfer matrix.
    pub trans: Array2<S>,
}

impl<S: Scalar> Params<S> {
    /// Random embeddings and heads, zero biases, BIO-aware transfer matrix.
    pub fn init(config: &ModelConfig) -> Self {
        let d = config.encoder.d;
        let mut rng = ChaCha8Rng::seed_from_u64(config.encoder.seed.wrapping_add(1));
        let mut head = |shape: (usize, usize)| match Normal::new(0.0, config.head_init_std) {
            Ok(n) if config.head_init_std > 0.0 => {
                Array2::from_shape_simple_fn(shape, || S::of(n.sample(&mut rng)))
            }
            _ => Array2::zeros(shape),
        };
        Params {
            embeddings: encoder::init_embeddings(&config.encoder, config.embedding_init_std),
            w: head((d, NUM_TAGS)),
            b: Array1::zeros(NUM_TAGS),
            w_rel: head((2 * d, NUM_RELATIONS)),
            b_rel: Array1::zeros(NUM_RELATIONS),
            trans: initial_transitions(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Params {
            embeddings: Array2::zeros(self.embeddings.dim()),
            w: Array2::zeros(self.w.dim()),
            b: Array1::zeros(self.b.len()),
            w_rel: Array2::zeros(self.w_rel.dim()),
            b_rel: Array1::zeros(self.b_rel.len()),
            trans: Array2::zeros(self.trans.dim()),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.embeddings, &self.w, &self.w_rel, &self.trans]
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
            && self.b.iter().chain(self.b_rel.iter()).all(|v| v.is_finite())
    }
}

/// `0` where `p -> q` is plausible, `-10000` where BIO forbids it.
pub fn initial_transitions<S: Scalar>() -> Array2<S> {
    Array2::from_shape_fn((NUM_TAGS, NUM_TAGS), |(p, q)| {
        let (p, q) = (Tag::from_index(p).unwrap(), Tag::from_index(q).unwrap());
        if p.may_precede(q) {
            S::zero()
        } else {
            S::of(IMPOSSIBLE)
        }
    })
}

/// Gradient of the per-sample loss; the embedding part is row-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<S> {
    pub embeddings: SparseRows<S>,
    pub w: Array2<S>,
    pub b: Array1<S>,
    pub w_rel: Array2<S>,
    pub b_rel: Array1<S>,
    pub trans: Array2<S>,
}

impl<S: Scalar> Grads<S> {
    pub fn zeros(d: usize) -> Self {
        Grads {
            embeddings: SparseRows::default(),
            w: Array2::zeros((d, NUM_TAGS)),
            b: Array1::zeros(NUM_TAGS),
            w_rel: Array2::zeros((2 * d, NUM_RELATIONS)),
            b_rel: Array1::zeros(NUM_RELATIONS),
            trans: Array2::zeros((NUM_TAGS, NUM_TAGS)),
        }
    }

    pub fn add_scaled(&mut self, other: &Grads<S>, k: S) {
        self.embeddings.merge(&other.embeddings, k);
        self.w.scaled_add(k, &other.w);
        self.b.scaled_add(k, &other.b);
        self.w_rel.scaled_add(k, &other.w_rel);
        self.b_rel.scaled_add(k, &other.b_rel);
        self.trans.scaled_add(k, &other.trans);
    }
}

/// One sentence, hashed and truncated, with gold interior tag indices when
/// known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedSentence {
    pub features: TokenFeatures,
    pub gold: Option<Vec<usize>>,
}

impl PreparedSentence {
    pub fn new<T: AsRef<str>>(tokens: &[T], config: &ModelConfig) -> Self {
        let n = tokens.len().min(config.max_tokens());
        PreparedSentence {
            features: TokenFeatures::new(&tokens[..n], &config.encoder),
            gold: None,
        }
    }

    pub fn with_gold<T: AsRef<str>>(
        tokens: &[T],
        tags: &[Tag],
        config: &ModelConfig,
    ) -> Result<Self, ExtractError> {
        if tokens.len() != tags.len() {
            return Err(ExtractError::LengthMismatch {
                tags: tags.len(),
                positions: tokens.len(),
            });
        }
        let mut s = Self::new(tokens, config);
        let gold = tags[..s.len()]
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.is_special() {
                    Err(ExtractError::DisallowedTag {
                        position: i,
                        tag: t.index(),
                    })
                } else {
                    Ok(t.index())
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        s.gold = Some(gold);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// A sentence pair ready for the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedPair {
    pub first: PreparedSentence,
    pub second: PreparedSentence,
    pub relation: Option<RelationLabel>,
}

fn lattice_mask(n: usize) -> TagMask {
    let mut m = TagMask::from_elem((n + 2, NUM_TAGS), false);
    m[[0, CLS]] = true;
    m[[n + 1, SEP]] = true;
    for i in 1..=n {
        for t in 0..INTERIOR {
            m[[i, t]] = true;
        }
    }
    m
}

fn lattice_unary<S: Scalar>(potentials: ArrayView2<S>) -> Array2<S> {
    let n = potentials.nrows();
    let mut u = Array2::zeros((n + 2, NUM_TAGS));
    u.slice_mut(s![1..=n, ..]).assign(&potentials);
    u
}

fn lattice_path(gold: &[usize]) -> Vec<usize> {
    let mut p = Vec::with_capacity(gold.len() + 2);
    p.push(CLS);
    p.extend_from_slice(gold);
    p.push(SEP);
    p
}

fn dropout_mask<S: Scalar, R: Rng>(shape: (usize, usize), rate: f64, rng: &mut R) -> Array2<S> {
    let keep = S::of(1.0 / (1.0 - rate));
    Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < rate {
            S::zero()
        } else {
            keep
        }
    })
}

/// Forward cache for one sentence.
struct SentencePass<S> {
    dropped: Array2<S>,
    mask: Option<Array2<S>>,
    sentence_vector: Array1<S>,
    h: Array2<S>,
    z: Array2<S>,
}

/// Decoded sentence with the quantities uncertainty scoring needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePrediction<S> {
    pub tags: Vec<Tag>,
    /// `n x K` softmax tag probabilities.
    pub probs: Array2<S>,
    /// Lattice score of `tags` (markers included).
    pub path_score: S,
    pub log_z: S,
}

impl<S: Scalar> SentencePrediction<S> {
    pub fn spans(&self) -> (Vec<Span>, Vec<Repair>) {
        decode_spans(&self.tags)
    }

    /// `P(tags | x)` under the CRF.
    pub fn path_probability(&self) -> S {
        (self.path_score - self.log_z).exp()
    }

    /// Probability the emission head assigns to each decoded tag.
    pub fn path_token_probs(&self) -> Vec<S> {
        self.tags
            .iter()
            .enumerate()
            .map(|(i, t)| self.probs[[i, t.index()]])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairPrediction<S> {
    pub first: SentencePrediction<S>,
    pub second: SentencePrediction<S>,
    pub relation: RelationDistribution<S>,
}

impl<S: Scalar> PairPrediction<S> {
    pub fn relation_label(&self) -> RelationLabel {
        self.relation.argmax()
    }
}

/// Per-sample loss pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLoss<S> {
    pub tagging: S,
    pub relation: S,
    pub total: S,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointModel<S> {
    pub config: ModelConfig,
    pub params: Params<S>,
}

impl<S: Scalar> JointModel<S> {
    pub fn new(config: ModelConfig) -> Result<Self, ExtractError> {
        config.validate()?;
        Ok(JointModel {
            params: Params::init(&config),
            config,
        })
    }

    pub fn d(&self) -> usize {
        self.config.encoder.d
    }

    pub fn prepare<T: AsRef<str>>(&self, x1: &[T], x2: &[T]) -> PreparedPair {
        PreparedPair {
            first: PreparedSentence::new(x1, &self.config),
            second: PreparedSentence::new(x2, &self.config),
            relation: None,
        }
    }

    fn sentence_forward<R: Rng>(
        &self,
        s: &PreparedSentence,
        rng: Option<&mut R>,
    ) -> Result<SentencePass<S>, ExtractError> {
        let out = encoder::encode_features(
            &s.features,
            self.params.embeddings.view(),
            &self.config.encoder,
        )?;
        let (dropped, mask) = match rng {
            Some(rng) if self.config.dropout > 0.0 && !s.is_empty() => {
                let m = dropout_mask(out.token_vectors.dim(), self.config.dropout, rng);
                (&out.token_vectors * &m, Some(m))
            }
            _ => (out.token_vectors.clone(), None),
        };
        let em = emissions(dropped.view(), self.params.w.view(), self.params.b.view())?;
        if em.h.iter().any(|v| !v.is_finite()) {
            return Err(ExtractError::NonFinite("emission probabilities".into()));
        }
        Ok(SentencePass {
            dropped,
            mask,
            sentence_vector: out.sentence_vector,
            h: em.h,
            z: em.z,
        })
    }

    fn unaries<'a>(&self, pass: &'a SentencePass<S>) -> ArrayView2<'a, S> {
        match self.config.potentials {
            Potentials::Probability => pass.h.view(),
            Potentials::Logit => pass.z.view(),
        }
    }

    fn decode(&self, pass: &SentencePass<S>) -> Result<SentencePrediction<S>, ExtractError> {
        let n = pass.h.nrows();
        let unary = lattice_unary(self.unaries(pass));
        let mask = lattice_mask(n);
        let (path, score) = viterbi_decode_masked(unary.view(), self.params.trans.view(), Some(&mask))?;
        let log_z =
            crate::crf::crf_log_partition_masked(unary.view(), self.params.trans.view(), Some(&mask))?;
        Ok(SentencePrediction {
            tags: path[1..=n]
                .iter()
                .map(|&t| Tag::from_index(t).expect("lattice tag"))
                .collect(),
            probs: pass.h.clone(),
            path_score: score,
            log_z,
        })
    }

    /// Inference without dropout.
    pub fn predict(&self, pair: &PreparedPair) -> Result<PairPrediction<S>, ExtractError> {
        let p1 = self.sentence_forward::<rand_chacha::ChaCha8Rng>(&pair.first, None)?;
        let p2 = self.sentence_forward::<rand_chacha::ChaCha8Rng>(&pair.second, None)?;
        let relation = relation_forward(
            p1.sentence_vector.view(),
            p2.sentence_vector.view(),
            self.params.w_rel.view(),
            self.params.b_rel.view(),
        )?;
        Ok(PairPrediction {
            first: self.decode(&p1)?,
            second: self.decode(&p2)?,
            relation,
        })
    }

    pub fn predict_tokens<T: AsRef<str>>(
        &self,
        x1: &[T],
        x2: &[T],
    ) -> Result<PairPrediction<S>, ExtractError> {
        self.predict(&self.prepare(x1, x2))
    }

    /// Loss `omega1 * l1 + omega2 * l2` for one labelled pair and its
    /// gradient. Dropout is applied when `rng` is given.
    pub fn loss_and_grad<R: Rng>(
        &self,
        pair: &PreparedPair,
        mut rng: Option<&mut R>,
    ) -> Result<(SampleLoss<S>, Grads<S>), ExtractError> {
        let gold_rel = pair.relation.ok_or(ExtractError::NoSamples)?;
        let (w1, w2) = (S::of(self.config.omega1), S::of(self.config.omega2));
        let d = self.d();
        let mut grads = Grads::zeros(d);

        let p1 = self.sentence_forward(&pair.first, rng.as_deref_mut())?;
        let p2 = self.sentence_forward(&pair.second, rng.as_deref_mut())?;

        let mut d_tokens = [Array2::zeros(p1.dropped.dim()), Array2::zeros(p2.dropped.dim())];
        let mut tagging = S::zero();
        for (k, (s, pass)) in [(&pair.first, &p1), (&pair.second, &p2)].into_iter().enumerate() {
            if s.is_empty() {
                continue;
            }
            let gold = s.gold.as_ref().ok_or(ExtractError::NoSamples)?;
            let n = s.len();
            let unary = lattice_unary(self.unaries(pass));
            let nll = crf_nll_grad_masked(
                unary.view(),
                self.params.trans.view(),
                &lattice_path(gold),
                Some(&lattice_mask(n)),
            )?;
            tagging += nll.nll;
            grads.trans.scaled_add(w1, &nll.d_trans);
            let d_pot = nll.d_unary.slice(s![1..=n, ..]).mapv(|v| v * w1);
            let dz = match self.config.potentials {
                Potentials::Probability => softmax_backward(pass.h.view(), d_pot.view()),
                Potentials::Logit => d_pot,
            };
            grads.w += &pass.dropped.t().dot(&dz);
            grads.b += &dz.sum_axis(Axis(0));
            let mut dv = dz.dot(&self.params.w.t());
            if let Some(m) = &pass.mask {
                dv *= m;
            }
            d_tokens[k] = dv;
        }

        let rel_in = ndarray::concatenate(
            Axis(0),
            &[p1.sentence_vector.view(), p2.sentence_vector.view()],
        )
        .expect("1-d concat");
        let rel_mask = match rng {
            Some(r) if self.config.dropout > 0.0 => {
                Some(dropout_mask::<S, _>((1, 2 * d), self.config.dropout, r).remove_axis(Axis(0)))
            }
            _ => None,
        };
        let rel_dropped = match &rel_mask {
            Some(m) => &rel_in * m,
            None => rel_in.clone(),
        };
        let dist = relation_forward(
            rel_dropped.slice(s![..d]),
            rel_dropped.slice(s![d..]),
            self.params.w_rel.view(),
            self.params.b_rel.view(),
        )?;
        let rl = relation_loss(&dist, gold_rel);
        let dlog = rl.d_logits.mapv(|v| v * w2);
        grads
            .w_rel
            .assign(&rel_dropped.view().insert_axis(Axis(1)).dot(&dlog.view().insert_axis(Axis(0))));
        grads.b_rel.assign(&dlog);
        let mut d_in = self.params.w_rel.dot(&dlog);
        if let Some(m) = &rel_mask {
            d_in *= m;
        }

        for (k, s) in [&pair.first, &pair.second].into_iter().enumerate() {
            let n = s.len();
            if n == 0 {
                continue;
            }
            let d_sv = d_in.slice(s![k * d..(k + 1) * d]).mapv(|v| v / S::of(n as f64));
            d_tokens[k] += &d_sv.insert_axis(Axis(0));
            encoder::backward(
                &s.features,
                &self.config.encoder,
                d_tokens[k].view(),
                &mut grads.embeddings,
            );
        }

        let total = w1 * tagging + w2 * rl.loss;
        Ok((
            SampleLoss {
                tagging,
                relation: rl.loss,
                total,
                clamped: rl.clamped,
            },
            grads,
        ))
    }
}
