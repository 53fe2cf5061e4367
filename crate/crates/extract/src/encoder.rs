//! Token/sentence encoder: the shared layer both task heads read from.
//!
//! The baseline is a hashed character n-gram embedding with neighbour
//! averaging. Token `i` gets the mean embedding of its `{2,3}`-grams (taken
//! over `<token>` with boundary markers); its output vector is the mean of
//! those base vectors over the window `[i - w, i + w]`. The sentence vector is
//! the mean of the token vectors.
//!
//! Buckets come from 64-bit FNV-1a over the little-endian seed followed by
//! the n-gram's UTF-8 bytes, reduced modulo `hash_buckets`. The mapping has
//! no platform or run dependence.

use std::collections::BTreeMap;
use std::time::Duration;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::ExtractError;
use crate::scalar::Scalar;

const NGRAM_ORDERS: [usize; 2] = [2, 3];
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub d: usize,
    pub hash_buckets: usize,
    pub context_window: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            d: 64,
            hash_buckets: 1 << 14,
            context_window: 1,
            seed: 0x5eed,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.d < 2 || self.hash_buckets < 1 {
            return Err(ExtractError::Config(format!(
                "encoder needs d >= 2 and hash_buckets >= 1, got d={} buckets={}",
                self.d, self.hash_buckets
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput<S> {
    pub token_vectors: Array2<S>,
    pub sentence_vector: Array1<S>,
}

impl<S: Scalar> EncoderOutput<S> {
    pub fn empty(d: usize) -> Self {
        EncoderOutput {
            token_vectors: Array2::zeros((0, d)),
            sentence_vector: Array1::zeros(d),
        }
    }

    pub fn len(&self) -> usize {
        self.token_vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Byte ranges of the tokens of `text`.
///
/// Word-boundary segmentation; whitespace dropped; punctuation split off,
/// except that `+`, `&` and `.` glued to a word stay part of it
/// (`Google+`, `AT&T`, `Node.js`). A trailing `.` is sentence punctuation.
pub fn tokenize_with_offsets(text: &str) -> Vec<(usize, usize)> {
    let segments: Vec<(usize, &str)> = text.split_word_bound_indices().collect();
    let is_word = |s: &str| s.chars().any(char::is_alphanumeric);
    #[derive(PartialEq)]
    enum Prev {
        Word,
        Glue,
        Other,
    }
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<Prev> = None;
    for (k, &(start, seg)) in segments.iter().enumerate() {
        let end = start + seg.len();
        if seg.chars().all(char::is_whitespace) {
            prev = None;
            continue;
        }
        let adjacent = out.last().is_some_and(|&(_, e)| e == start);
        if is_word(seg) {
            if adjacent && prev == Some(Prev::Glue) {
                out.last_mut().expect("adjacent implies a token").1 = end;
            } else {
                out.push((start, end));
            }
            prev = Some(Prev::Word);
            continue;
        }
        let next_word = segments
            .get(k + 1)
            .is_some_and(|&(s, n)| s == end && is_word(n));
        let glue = matches!(seg, "+" | "&") || (seg == "." && next_word);
        if glue && adjacent && matches!(prev, Some(Prev::Word | Prev::Glue)) {
            out.last_mut().expect("adjacent implies a token").1 = end;
            prev = Some(Prev::Glue);
        } else {
            out.push((start, end));
            prev = Some(Prev::Other);
        }
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_offsets(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect()
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    seed.to_le_bytes()
        .iter()
        .chain(bytes)
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Hash buckets of the character n-grams of one token.
pub fn token_buckets(token: &str, config: &EncoderConfig) -> Vec<usize> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    let mut buf = String::new();
    for n in NGRAM_ORDERS {
        for w in chars.windows(n) {
            buf.clear();
            buf.extend(w);
            out.push((fnv1a(config.seed, buf.as_bytes()) % config.hash_buckets as u64) as usize);
        }
    }
    out
}

/// Pre-hashed token sequence, reusable across forward/backward passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFeatures {
    pub buckets: Vec<Vec<usize>>,
}

impl TokenFeatures {
    pub fn new<T: AsRef<str>>(tokens: &[T], config: &EncoderConfig) -> Self {
        TokenFeatures {
            buckets: tokens
                .iter()
                .map(|t| token_buckets(t.as_ref(), config))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

fn window(i: usize, n: usize, w: usize) -> std::ops::Range<usize> {
    i.saturating_sub(w)..(i + w + 1).min(n)
}

pub fn init_embeddings<S: Scalar>(config: &EncoderConfig, scale: f64) -> Array2<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, scale).expect("positive scale");
    Array2::from_shape_simple_fn((config.hash_buckets, config.d), || {
        S::of(normal.sample(&mut rng))
    })
}

pub fn encode_features<S: Scalar>(
    features: &TokenFeatures,
    embeddings: ArrayView2<S>,
    config: &EncoderConfig,
) -> Result<EncoderOutput<S>, ExtractError> {
    let (d, n) = (config.d, features.len());
    if embeddings.ncols() != d || embeddings.nrows() != config.hash_buckets {
        return Err(ExtractError::Dimension(format!(
            "embedding table {:?} does not match config ({}, {})",
            embeddings.dim(),
            config.hash_buckets,
            d
        )));
    }
    if n == 0 {
        return Ok(EncoderOutput::empty(d));
    }
    let mut base = Array2::<S>::zeros((n, d));
    for (j, buckets) in features.buckets.iter().enumerate() {
        let inv = S::one() / S::of(buckets.len() as f64);
        let mut row = base.row_mut(j);
        for &g in buckets {
            let e = embeddings.row(g);
            if e.iter().any(|v| !v.is_finite()) {
                return Err(ExtractError::NonFinite(format!("embedding row {g}")));
            }
            row.scaled_add(inv, &e);
        }
    }
    let mut tokens = Array2::<S>::zeros((n, d));
    for i in 0..n {
        let win = window(i, n, config.context_window);
        let inv = S::one() / S::of(win.len() as f64);
        let mut row = tokens.row_mut(i);
        for j in win {
            row.scaled_add(inv, &base.row(j));
        }
    }
    let sentence = tokens.mean_axis(Axis(0)).expect("n > 0");
    Ok(EncoderOutput {
        token_vectors: tokens,
        sentence_vector: sentence,
    })
}

pub fn encode<S: Scalar, T: AsRef<str>>(
    tokens: &[T],
    embeddings: ArrayView2<S>,
    config: &EncoderConfig,
) -> Result<EncoderOutput<S>, ExtractError> {
    encode_features(&TokenFeatures::new(tokens, config), embeddings, config)
}

/// Row-sparse gradient for the embedding table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows<S> {
    pub rows: BTreeMap<usize, Array1<S>>,
}

impl<S: Scalar> SparseRows<S> {
    pub fn add_row(&mut self, row: usize, v: &Array1<S>, scale: S) {
        self.rows
            .entry(row)
            .or_insert_with(|| Array1::zeros(v.len()))
            .scaled_add(scale, v);
    }

    pub fn merge(&mut self, other: &SparseRows<S>, scale: S) {
        for (&r, v) in &other.rows {
            self.add_row(r, v, scale);
        }
    }

    pub fn scatter_into(&self, dense: &mut Array2<S>, scale: S) {
        for (&r, v) in &self.rows {
            dense.row_mut(r).scaled_add(scale, v);
        }
    }
}

/// Accumulates `dL/d embeddings` given `dL/d token_vectors`.
///
/// Gradients flowing into the sentence vector must already be folded into
/// `d_tokens` (each row receives `d_sentence / n`).
pub fn backward<S: Scalar>(
    features: &TokenFeatures,
    config: &EncoderConfig,
    d_tokens: ArrayView2<S>,
    grad: &mut SparseRows<S>,
) {
    let n = features.len();
    let mut d_base = Array2::<S>::zeros((n, config.d));
    for i in 0..n {
        let win = window(i, n, config.context_window);
        let inv = S::one() / S::of(win.len() as f64);
        for j in win {
            d_base.row_mut(j).scaled_add(inv, &d_tokens.row(i));
        }
    }
    for (j, buckets) in features.buckets.iter().enumerate() {
        let inv = S::one() / S::of(buckets.len() as f64);
        let row = d_base.row(j).to_owned();
        for &g in buckets {
            grad.add_row(g, &row, inv);
        }
    }
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("remote encoder unavailable: {0}")]
    Unavailable(String),
    #[error("malformed remote encoder response: {0}")]
    Malformed(String),
    #[error("remote encoder dimension {got} does not match configured {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub token_vectors: Vec<Vec<f64>>,
    pub sentence_vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteInfo {
    pub dim: usize,
}

/// Transport for an external encoder service.
pub trait EncoderClient {
    fn encode(&self, tokens: &[String]) -> Result<RemoteResponse, RemoteError>;
}

/// `POST {endpoint}/encode` with `{"tokens": [...]}`; `GET {endpoint}/info` for the dimension.
#[derive(Debug, Clone)]
pub struct HttpEncoderClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpEncoderClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEncoderClient {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn info(&self) -> Result<RemoteInfo, RemoteError> {
        self.agent
            .get(format!("{}/info", self.endpoint))
            .call()
            .map_err(|e| RemoteError::Unavailable(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| RemoteError::Malformed(e.to_string()))
    }
}

impl EncoderClient for HttpEncoderClient {
    fn encode(&self, tokens: &[String]) -> Result<RemoteResponse, RemoteError> {
        let req = RemoteRequest {
            tokens: tokens.to_vec(),
        };
        self.agent
            .post(format!("{}/encode", self.endpoint))
            .send_json(&req)
            .map_err(|e| RemoteError::Unavailable(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| RemoteError::Malformed(e.to_string()))
    }
}

/// Same output contract as [`encode`], backed by an external service.
pub fn remote_encode<S: Scalar>(
    tokens: &[String],
    client: &dyn EncoderClient,
    d: usize,
) -> Result<EncoderOutput<S>, RemoteError> {
    let resp = client.encode(tokens)?;
    if resp.token_vectors.len() != tokens.len() {
        return Err(RemoteError::Malformed(format!(
            "{} token vectors for {} tokens",
            resp.token_vectors.len(),
            tokens.len()
        )));
    }
    let got = resp.sentence_vector.len();
    if got != d {
        return Err(RemoteError::DimensionMismatch { expected: d, got });
    }
    if let Some(row) = resp.token_vectors.iter().find(|r| r.len() != d) {
        return Err(RemoteError::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    let flat: Vec<S> = resp.token_vectors.iter().flatten().map(|&x| S::of(x)).collect();
    if flat.iter().any(|x| !x.is_finite()) {
        return Err(RemoteError::Malformed("non-finite entry".into()));
    }
    Ok(EncoderOutput {
        token_vectors: Array2::from_shape_vec((tokens.len(), d), flat)
            .expect("shape checked above"),
        sentence_vector: resp.sentence_vector.iter().map(|&x| S::of(x)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EncoderConfig {
        EncoderConfig {
            d: 8,
            hash_buckets: 97,
            context_window: 1,
            seed: 3,
        }
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Google closed Google+"), ["Google", "closed", "Google+"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A,B"), ["A", ",", "B"]);
        assert_eq!(tokenize("AT&T buys Node.js"), ["AT&T", "buys", "Node.js"]);
        assert_eq!(tokenize("Tencent launches WeChat Pay."), ["Tencent", "launches", "WeChat", "Pay", "."]);
        assert_eq!(tokenize("C++ rocks"), ["C++", "rocks"]);
        assert_eq!(tokenize("deposit-free"), ["deposit", "-", "free"]);
    }

    #[test]
    fn offsets_slice_the_source() {
        let text = "ofo cancels  deposit-free service";
        let toks = tokenize_with_offsets(text);
        assert_eq!(&text[toks[2].0..toks[4].1], "deposit-free");
    }

    #[test]
    fn bucket_hashing_is_pinned() {
        let cfg = EncoderConfig::default();
        // frozen values: any change to the hash breaks saved checkpoints
        assert_eq!(fnv1a(0, b""), 0xa8c7_f832_281a_39c5);
        assert_eq!(token_buckets("a", &cfg)[0], 993);
        let b = token_buckets("ab", &cfg);
        assert_eq!(b.len(), 3 + 2);
        assert_eq!(b, token_buckets("ab", &cfg));
    }

    #[test]
    fn shapes_and_determinism() {
        let cfg = small();
        let emb = init_embeddings::<f64>(&cfg, 1.0);
        let toks = ["Google", "offers", "search"];
        let a = encode(&toks, emb.view(), &cfg).unwrap();
        assert_eq!(a.token_vectors.dim(), (3, 8));
        assert_eq!(a.sentence_vector.len(), 8);
        let b = encode(&toks, emb.view(), &cfg).unwrap();
        assert_eq!(a, b);
        let empty = encode::<f64, &str>(&[], emb.view(), &cfg).unwrap();
        assert_eq!(empty.token_vectors.nrows(), 0);
        assert!(empty.sentence_vector.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_token_sentence_vector() {
        let cfg = EncoderConfig {
            context_window: 0,
            ..small()
        };
        let emb = init_embeddings::<f64>(&cfg, 1.0);
        let out = encode(&["Tencent"], emb.view(), &cfg).unwrap();
        assert_eq!(out.sentence_vector, out.token_vectors.row(0));
    }

    #[test]
    fn non_finite_parameter_detected() {
        let cfg = small();
        let mut emb = init_embeddings::<f64>(&cfg, 1.0);
        let g = token_buckets("x", &cfg)[0];
        emb[[g, 0]] = f64::NAN;
        assert!(matches!(
            encode(&["x"], emb.view(), &cfg),
            Err(ExtractError::NonFinite(_))
        ));
    }

    #[test]
    fn embedding_gradient_matches_finite_differences() {
        let cfg = small();
        let emb = init_embeddings::<f64>(&cfg, 1.0);
        let toks = ["Baidu", "closes", "maps", "app"];
        let feats = TokenFeatures::new(&toks, &cfg);
        // scalar loss: sum of token vectors weighted by a fixed probe
        let probe = Array2::from_shape_fn((4, 8), |(i, j)| ((i * 8 + j) as f64 * 0.37).sin());
        let loss = |e: &Array2<f64>| {
            let out = encode_features(&feats, e.view(), &cfg).unwrap();
            (&out.token_vectors * &probe).sum()
        };
        let mut grad = SparseRows::default();
        backward(&feats, &cfg, probe.view(), &mut grad);
        let h = 1e-5;
        for (&row, g) in &grad.rows {
            for col in 0..cfg.d {
                let mut p = emb.clone();
                p[[row, col]] += h;
                let mut m = emb.clone();
                m[[row, col]] -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                assert!((fd - g[col]).abs() < 1e-8, "row {row} col {col}");
            }
        }
    }

    struct Fixed(RemoteResponse);

    impl EncoderClient for Fixed {
        fn encode(&self, _: &[String]) -> Result<RemoteResponse, RemoteError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn remote_pass_through_and_validation() {
        let resp = RemoteResponse {
            token_vectors: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            sentence_vector: vec![2.0, 3.0],
        };
        let toks = vec!["a".to_string(), "b".to_string()];
        let out: EncoderOutput<f64> = remote_encode(&toks, &Fixed(resp.clone()), 2).unwrap();
        assert_eq!(out.token_vectors[[1, 0]], 3.0);
        assert_eq!(out.sentence_vector.to_vec(), vec![2.0, 3.0]);
        assert!(matches!(
            remote_encode::<f64>(&toks, &Fixed(resp), 3),
            Err(RemoteError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn unreachable_endpoint_is_typed_error() {
        // port 9 (discard) on localhost is closed in the sandbox
        let client = HttpEncoderClient::new("http://127.0.0.1:9", Duration::from_millis(500));
        let start = std::time::Instant::now();
        let err = remote_encode::<f64>(&["x".to_string()], &client, 4).unwrap_err();
        assert!(matches!(err, RemoteError::Unavailable(_)));
        assert!(start.elapsed() < Duration::from_secs(5));
    }
}
