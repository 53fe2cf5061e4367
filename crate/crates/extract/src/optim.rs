use ndarray::{Array2, ArrayView1, ArrayViewMut1, Zip};

fn flat<S>(a: &mut Array2<S>) -> ArrayViewMut1<'_, S> {
    let n = a.len();
    a.view_mut().into_shape_with_order(n).expect("contiguous")
}
use serde::{Deserialize, Serialize};

use crate::model::{Grads, Params};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adaptive moment estimation over every parameter tensor. The update is
/// dense: rows of the embedding table with no gradient this step still see
/// their moments decay and move accordingly.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub config: AdamConfig,
    m: Params<S>,
    v: Params<S>,
    t: u64,
}

struct Step<S> {
    lr: S,
    b1: S,
    b2: S,
    eps: S,
    c1: S,
    c2: S,
}

impl<S: Scalar> Step<S> {
    fn apply_matrix(&self, p: &mut Array2<S>, m: &mut Array2<S>, v: &mut Array2<S>, g: &Array2<S>) {
        let gv = g.view().into_shape_with_order(g.len()).expect("contiguous");
        self.apply(flat(p), flat(m), flat(v), Some(gv));
    }

    fn apply(&self, p: ArrayViewMut1<S>, m: ArrayViewMut1<S>, v: ArrayViewMut1<S>, g: Option<ArrayView1<S>>) {
        let (one, zero) = (S::one(), S::zero());
        match g {
            Some(g) => Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = self.b1 * *m + (one - self.b1) * g;
                *v = self.b2 * *v + (one - self.b2) * g * g;
                *p -= self.lr * (*m / self.c1) / ((*v / self.c2).sqrt() + self.eps);
            }),
            None => Zip::from(p).and(m).and(v).for_each(|p, m, v| {
                *m = self.b1 * *m;
                *v = self.b2 * *v;
                if *m != zero {
                    *p -= self.lr * (*m / self.c1) / ((*v / self.c2).sqrt() + self.eps);
                }
            }),
        }
    }
}

impl<S: Scalar> Adam<S> {
    pub fn new(config: AdamConfig, params: &Params<S>) -> Self {
        Adam {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut Params<S>, g: &Grads<S>) {
        self.t += 1;
        let c = &self.config;
        let st = Step {
            lr: S::of(c.learning_rate),
            b1: S::of(c.beta1),
            b2: S::of(c.beta2),
            eps: S::of(c.eps),
            c1: S::one() - S::of(c.beta1).powi(self.t as i32),
            c2: S::one() - S::of(c.beta2).powi(self.t as i32),
        };
        st.apply_matrix(&mut params.w, &mut self.m.w, &mut self.v.w, &g.w);
        st.apply(params.b.view_mut(), self.m.b.view_mut(), self.v.b.view_mut(), Some(g.b.view()));
        st.apply_matrix(&mut params.w_rel, &mut self.m.w_rel, &mut self.v.w_rel, &g.w_rel);
        st.apply(params.b_rel.view_mut(), self.m.b_rel.view_mut(), self.v.b_rel.view_mut(), Some(g.b_rel.view()));
        st.apply_matrix(&mut params.trans, &mut self.m.trans, &mut self.v.trans, &g.trans);
        for r in 0..params.embeddings.nrows() {
            st.apply(
                params.embeddings.row_mut(r),
                self.m.embeddings.row_mut(r),
                self.v.embeddings.row_mut(r),
                g.embeddings.rows.get(&r).map(|x| x.view()),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::encoder::EncoderConfig;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = ModelConfig {
            encoder: EncoderConfig { d: 2, hash_buckets: 3, ..EncoderConfig::default() },
            ..ModelConfig::default()
        };
        let mut p = Params::<f64>::init(&cfg);
        let before = p.clone();
        let mut g = Grads::zeros(2);
        g.b[0] = 0.3;
        g.b[1] = -7.0;
        g.embeddings.add_row(1, &ndarray::arr1(&[1.0, 0.0]), 1.0);
        let mut adam = Adam::new(AdamConfig::default(), &p);
        adam.step(&mut p, &g);
        assert!((before.b[0] - p.b[0] - 2e-5).abs() < 1e-9);
        assert!((p.b[1] - before.b[1] - 2e-5).abs() < 1e-9);
        assert_eq!(p.b[2], before.b[2]);
        assert!((before.embeddings[[1, 0]] - p.embeddings[[1, 0]] - 2e-5).abs() < 1e-9);
        assert_eq!(p.embeddings[[1, 1]], before.embeddings[[1, 1]]);
        // momentum keeps moving a row whose gradient vanished
        adam.step(&mut p, &Grads::zeros(2));
        assert!(before.embeddings[[1, 0]] - p.embeddings[[1, 0]] > 2e-5);
    }
}
