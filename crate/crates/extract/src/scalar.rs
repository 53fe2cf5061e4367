use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point element type shared by the encoder, the heads and the CRF.
///
/// Implemented for `f32` and `f64`. Tolerance-sensitive checks (enumeration
/// oracles, finite differences) are meant to run at `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossless for f64, rounding for f32.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `log(sum(exp(xs)))`, returning `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp<S: Scalar>(xs: impl IntoIterator<Item = S> + Clone) -> S {
    let max = xs
        .clone()
        .into_iter()
        .fold(S::neg_infinity(), |m, x| if x > m { x } else { m });
    if max == S::neg_infinity() {
        return max;
    }
    let sum: S = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive() {
        let xs = [0.3f64, -1.2, 2.5];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(xs) - naive).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>([]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn works_in_single_precision() {
        let v: f32 = log_sum_exp([1000.0f32, 1000.0]);
        assert!((v - (1000.0 + 2f32.ln())).abs() < 1e-3);
    }
}
