use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::ExtractError;
use crate::scalar::Scalar;

/// Pre-softmax scores `z` and per-token tag distributions `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionState<S> {
    pub z: Array2<S>,
    pub h: Array2<S>,
}

pub fn softmax<S: Scalar>(x: ArrayView1<S>) -> Array1<S> {
    let max = x.iter().copied().fold(S::neg_infinity(), S::max);
    let e = x.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e / sum
}

pub fn softmax_rows<S: Scalar>(z: ArrayView2<S>) -> Array2<S> {
    let mut h = z.to_owned();
    for mut row in h.rows_mut() {
        let s = softmax(row.view());
        row.assign(&s);
    }
    h
}

/// `z_i = W^T v_i + b`, `h_i = softmax(z_i)`, with `W` stored `d x K`.
pub fn emissions<S: Scalar>(
    tokens: ArrayView2<S>,
    w: ArrayView2<S>,
    b: ArrayView1<S>,
) -> Result<EmissionState<S>, ExtractError> {
    if tokens.ncols() != w.nrows() || w.ncols() != b.len() {
        return Err(ExtractError::Dimension(format!(
            "tokens {:?}, W {:?}, b {}",
            tokens.dim(),
            w.dim(),
            b.len()
        )));
    }
    let z = tokens.dot(&w) + b.insert_axis(Axis(0));
    let h = softmax_rows(z.view());
    Ok(EmissionState { z, h })
}

/// Pulls `dL/dh` back through the rowwise softmax to `dL/dz`.
pub fn softmax_backward<S: Scalar>(h: ArrayView2<S>, dh: ArrayView2<S>) -> Array2<S> {
    let mut dz = Array2::zeros(h.dim());
    for ((hr, dr), mut out) in h.rows().into_iter().zip(dh.rows()).zip(dz.rows_mut()) {
        let dot: S = hr.iter().zip(dr.iter()).map(|(&a, &b)| a * b).sum();
        for ((o, &hv), &dv) in out.iter_mut().zip(hr.iter()).zip(dr.iter()) {
            *o = hv * (dv - dot);
        }
    }
    dz
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_row_is_uniform() {
        let h = softmax_rows(Array2::<f64>::zeros((1, 16)).view());
        assert!(h.iter().all(|&p| (p - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn shift_invariance() {
        let z = array![[0.3f64, -1.0, 2.0, 0.5]];
        let shifted = &z + 5.0;
        let a = softmax_rows(z.view());
        let b = softmax_rows(shifted.view());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let v = Array2::<f64>::zeros((2, 3));
        let w = Array2::<f64>::zeros((4, 5));
        let b = Array1::<f64>::zeros(5);
        assert!(emissions(v.view(), w.view(), b.view()).is_err());
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let z = array![[0.2, -0.4, 1.1], [0.0, 0.7, -2.0]];
        let probe = array![[1.0, -2.0, 0.5], [0.3, 0.1, -0.7]];
        let f = |z: &Array2<f64>| (&softmax_rows(z.view()) * &probe).sum();
        let dz = softmax_backward(softmax_rows(z.view()).view(), probe.view());
        let eps = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut p = z.clone();
                p[[i, j]] += eps;
                let mut m = z.clone();
                m[[i, j]] -= eps;
                let fd = (f(&p) - f(&m)) / (2.0 * eps);
                assert!((fd - dz[[i, j]]).abs() < 1e-9);
            }
        }
    }
}
