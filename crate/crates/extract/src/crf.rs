//! Linear-chain CRF over per-position unary potentials and a transfer matrix.
//!
//! The score of a tag path `y` over `n` positions is
//! `u[0, y0] + sum_{j>=1} (u[j, yj] + A[y(j-1), yj])`. The unaries are the
//! tag probabilities `h` under the default potential mode, or the raw logits
//! `z` under the alternative mode; this module only sees `u`.
//!
//! Every routine optionally takes an allowed-tag mask (`n x K`). Masked
//! states are excluded from the path space entirely.

use ndarray::{Array2, ArrayView2};

use crate::error::ExtractError;
use crate::scalar::{log_sum_exp, Scalar};

/// `allowed[[i, k]]` says whether tag `k` may occupy position `i`.
pub type TagMask = Array2<bool>;

/// `-log P(y | x)` with its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfNll<S> {
    pub nll: S,
    pub log_z: S,
    pub d_unary: Array2<S>,
    pub d_trans: Array2<S>,
}

/// Node and summed edge marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals<S> {
    pub log_z: S,
    pub nodes: Array2<S>,
    pub edges: Array2<S>,
}

fn check<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Result<(), ExtractError> {
    let (n, k) = unary.dim();
    if n == 0 {
        return Err(ExtractError::EmptySequence);
    }
    if trans.dim() != (k, k) {
        return Err(ExtractError::Dimension(format!(
            "transfer matrix {:?} for {k} tags",
            trans.dim()
        )));
    }
    if let Some(m) = mask {
        if m.dim() != (n, k) {
            return Err(ExtractError::Dimension(format!(
                "mask {:?} for unaries {:?}",
                m.dim(),
                (n, k)
            )));
        }
    }
    Ok(())
}

#[inline]
fn unary_at<S: Scalar>(unary: ArrayView2<S>, mask: Option<&TagMask>, i: usize, k: usize) -> S {
    match mask {
        Some(m) if !m[[i, k]] => S::neg_infinity(),
        _ => unary[[i, k]],
    }
}

fn forward<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Array2<S> {
    let (n, k) = unary.dim();
    let mut alpha = Array2::from_elem((n, k), S::neg_infinity());
    for t in 0..k {
        alpha[[0, t]] = unary_at(unary, mask, 0, t);
    }
    for i in 1..n {
        for q in 0..k {
            let u = unary_at(unary, mask, i, q);
            if u == S::neg_infinity() {
                continue;
            }
            let lse = log_sum_exp((0..k).map(|p| alpha[[i - 1, p]] + trans[[p, q]]));
            alpha[[i, q]] = lse + u;
        }
    }
    alpha
}

fn backward<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Array2<S> {
    let (n, k) = unary.dim();
    let mut beta = Array2::from_elem((n, k), S::neg_infinity());
    for t in 0..k {
        if unary_at(unary, mask, n - 1, t) != S::neg_infinity() {
            beta[[n - 1, t]] = S::zero();
        }
    }
    for i in (0..n - 1).rev() {
        for p in 0..k {
            if unary_at(unary, mask, i, p) == S::neg_infinity() {
                continue;
            }
            beta[[i, p]] = log_sum_exp(
                (0..k).map(|q| trans[[p, q]] + unary_at(unary, mask, i + 1, q) + beta[[i + 1, q]]),
            );
        }
    }
    beta
}

pub fn crf_log_partition<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
) -> Result<S, ExtractError> {
    crf_log_partition_masked(unary, trans, None)
}

pub fn crf_log_partition_masked<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Result<S, ExtractError> {
    check(unary, trans, mask)?;
    let alpha = forward(unary, trans, mask);
    Ok(log_sum_exp(alpha.row(unary.nrows() - 1).iter().copied()))
}

pub fn path_score<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    path: &[usize],
) -> Result<S, ExtractError> {
    let (n, k) = unary.dim();
    if path.len() != n {
        return Err(ExtractError::LengthMismatch {
            tags: path.len(),
            positions: n,
        });
    }
    if let Some((i, &t)) = path.iter().enumerate().find(|(_, &t)| t >= k) {
        return Err(ExtractError::DisallowedTag { position: i, tag: t });
    }
    let mut s = S::zero();
    for (i, &t) in path.iter().enumerate() {
        s += unary[[i, t]];
        if i > 0 {
            s += trans[[path[i - 1], t]];
        }
    }
    Ok(s)
}

/// Best path and its score. Ties go to the lowest tag index, both when
/// choosing the final tag and at every backpointer.
pub fn viterbi_decode<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
) -> Result<(Vec<usize>, S), ExtractError> {
    viterbi_decode_masked(unary, trans, None)
}

pub fn viterbi_decode_masked<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Result<(Vec<usize>, S), ExtractError> {
    check(unary, trans, mask)?;
    let (n, k) = unary.dim();
    let mut delta = Array2::from_elem((n, k), S::neg_infinity());
    let mut back = Array2::<usize>::zeros((n, k));
    for t in 0..k {
        delta[[0, t]] = unary_at(unary, mask, 0, t);
    }
    for i in 1..n {
        for q in 0..k {
            let u = unary_at(unary, mask, i, q);
            if u == S::neg_infinity() {
                continue;
            }
            let (mut best, mut arg) = (S::neg_infinity(), 0);
            for p in 0..k {
                let v = delta[[i - 1, p]] + trans[[p, q]];
                if v > best {
                    best = v;
                    arg = p;
                }
            }
            delta[[i, q]] = best + u;
            back[[i, q]] = arg;
        }
    }
    let (mut best, mut last) = (S::neg_infinity(), 0);
    for t in 0..k {
        if delta[[n - 1, t]] > best {
            best = delta[[n - 1, t]];
            last = t;
        }
    }
    if best == S::neg_infinity() {
        return Err(ExtractError::DisallowedTag {
            position: n - 1,
            tag: last,
        });
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[[i, path[i]]];
    }
    Ok((path, best))
}

pub fn marginals<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    mask: Option<&TagMask>,
) -> Result<Marginals<S>, ExtractError> {
    check(unary, trans, mask)?;
    let (n, k) = unary.dim();
    let alpha = forward(unary, trans, mask);
    let beta = backward(unary, trans, mask);
    let log_z = log_sum_exp(alpha.row(n - 1).iter().copied());
    let mut nodes = Array2::zeros((n, k));
    for i in 0..n {
        for t in 0..k {
            nodes[[i, t]] = (alpha[[i, t]] + beta[[i, t]] - log_z).exp();
        }
    }
    let mut edges = Array2::zeros((k, k));
    for i in 0..n - 1 {
        for p in 0..k {
            let a = alpha[[i, p]];
            if a == S::neg_infinity() {
                continue;
            }
            for q in 0..k {
                let rest = unary_at(unary, mask, i + 1, q) + beta[[i + 1, q]];
                if rest == S::neg_infinity() {
                    continue;
                }
                edges[[p, q]] += (a + trans[[p, q]] + rest - log_z).exp();
            }
        }
    }
    Ok(Marginals {
        log_z,
        nodes,
        edges,
    })
}

pub fn crf_nll_grad<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    path: &[usize],
) -> Result<CrfNll<S>, ExtractError> {
    crf_nll_grad_masked(unary, trans, path, None)
}

/// Negative log-likelihood of `path`; gradients are expected minus observed
/// potential counts.
pub fn crf_nll_grad_masked<S: Scalar>(
    unary: ArrayView2<S>,
    trans: ArrayView2<S>,
    path: &[usize],
    mask: Option<&TagMask>,
) -> Result<CrfNll<S>, ExtractError> {
    check(unary, trans, mask)?;
    let score = path_score(unary, trans, path)?;
    if let Some(m) = mask {
        if let Some((i, &t)) = path.iter().enumerate().find(|&(i, &t)| !m[[i, t]]) {
            return Err(ExtractError::DisallowedTag { position: i, tag: t });
        }
    }
    let Marginals {
        log_z,
        mut nodes,
        mut edges,
    } = marginals(unary, trans, mask)?;
    for (i, &t) in path.iter().enumerate() {
        nodes[[i, t]] -= S::one();
        if i > 0 {
            edges[[path[i - 1], t]] -= S::one();
        }
    }
    Ok(CrfNll {
        nll: log_z - score,
        log_z,
        d_unary: nodes,
        d_trans: edges,
    })
}
