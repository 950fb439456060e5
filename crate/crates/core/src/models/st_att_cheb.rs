//! One spatio-temporal block: spatial and temporal attention from learned
//! bilinear forms over the window, Chebyshev graph convolution with
//! attention-modulated supports, a width-3 temporal convolution, global
//! temporal pooling, and a per-node affine head.

use super::{ModelConfig, ModelError, Param};
use crate::autodiff::{Tape, TensorId};
use crate::graphs::NormalizedGraph;
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

pub struct StAttChebModel {
    pub config: ModelConfig,
    pub graph: NormalizedGraph,
    params: Vec<Param>,
}

const W_SPAT: usize = 0;
const W_TEMP: usize = 1;
// Chebyshev filters occupy [CHEB0, CHEB0 + cheb_k)
const CHEB0: usize = 2;

impl StAttChebModel {
    pub fn new(config: &ModelConfig, graph: NormalizedGraph, rng: &mut ChaCha8Rng) -> Self {
        let (v, h, l, k) = (config.n_vars, config.hidden, config.seq_len, config.cheb_k);
        let mut params = vec![
            Param::uniform("w_spat", (l, l), l, rng),
            Param::uniform("w_temp", (v, v), v, rng),
        ];
        for i in 0..k {
            params.push(Param::uniform(&format!("w_cheb_{i}"), (1, h), 1, rng));
        }
        params.push(Param::zeros("b_cheb", (1, h)));
        for i in 0..3 {
            // temporal taps start near the identity filter
            let init = if i == 1 { 1.0 } else { 0.0 };
            params.push(Param::from_value(
                &format!("tap_{i}"),
                Array2::from_elem((1, 1), init),
            ));
        }
        params.push(Param::uniform("w_head", (v, h), h, rng));
        params.push(Param::zeros("b_head", (v, 1)));
        Self {
            config: config.clone(),
            graph,
            params,
        }
    }

    fn b_cheb(&self) -> usize {
        CHEB0 + self.config.cheb_k
    }

    fn tap(&self, i: usize) -> usize {
        self.b_cheb() + 1 + i
    }

    fn w_head(&self) -> usize {
        self.b_cheb() + 4
    }

    fn b_head(&self) -> usize {
        self.b_cheb() + 5
    }

    pub fn params(&self) -> Vec<&Param> {
        self.params.iter().collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.params.iter_mut().collect()
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        ids: &[TensorId],
        window: &Array2<f64>,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId, ModelError> {
        let (l, v) = window.dim();
        let k = self.config.cheb_k;
        let supports = self
            .graph
            .cheb_supports
            .as_ref()
            .expect("StAttCheb is constructed with Chebyshev supports");

        let x = tape.constant(window.clone()); // L×V
        let z = tape.transpose(x); // V×L

        // spatial attention over nodes
        let zw = tape.matmul(z, ids[W_SPAT])?;
        let zt = tape.transpose(z);
        let s_raw = tape.matmul(zw, zt)?; // V×V
        // row-stochastic attention rescaled so the mean modulation per
        // entry is 1 rather than 1/V, keeping the supports at their
        // natural magnitude
        let s_attn = tape.softmax_rows(s_raw);
        let s_attn = tape.mul_scalar(s_attn, v as f64);

        // temporal attention over window positions
        let xw = tape.matmul(x, ids[W_TEMP])?;
        let e_raw = tape.matmul(xw, z)?; // L×L
        let e_attn = tape.softmax_rows(e_raw);
        let x_mod = tape.matmul(e_attn, x)?; // L×V

        // Chebyshev graph convolution per step, supports modulated by
        // the spatial attention map
        let mut modulated = Vec::with_capacity(k);
        for support in supports.iter().take(k) {
            let t_k = tape.constant(support.clone());
            modulated.push(tape.mul(t_k, s_attn)?);
        }
        let mut conv_steps = Vec::with_capacity(l);
        for step in 0..l {
            let row = tape.slice_row(x_mod, step)?;
            let col = tape.transpose(row); // V×1
            let mut acc: Option<TensorId> = None;
            for (ki, &m) in modulated.iter().enumerate() {
                let prop = tape.matmul(m, col)?;
                let term = tape.matmul(prop, ids[CHEB0 + ki])?; // V×H
                acc = Some(match acc {
                    Some(a) => tape.add(a, term)?,
                    None => term,
                });
            }
            let feat = acc.expect("cheb_k >= 1");
            let feat = tape.add_rowvec(feat, ids[self.b_cheb()])?;
            conv_steps.push(feat);
        }

        // temporal convolution, kernel 3, zero-padded
        let mut temporal = Vec::with_capacity(l);
        for step in 0..l {
            let mut acc: Option<TensorId> = None;
            for (ti, offset) in [-1i64, 0, 1].into_iter().enumerate() {
                let src = step as i64 + offset;
                if src < 0 || src >= l as i64 {
                    continue;
                }
                let term = tape.scale(conv_steps[src as usize], ids[self.tap(ti)])?;
                acc = Some(match acc {
                    Some(a) => tape.add(a, term)?,
                    None => term,
                });
            }
            let g = acc.expect("kernel always overlaps the window");
            temporal.push(tape.relu(g));
        }

        // global temporal pooling
        let mut pooled: Option<TensorId> = None;
        for &g in &temporal {
            pooled = Some(match pooled {
                Some(p) => tape.add(p, g)?,
                None => g,
            });
        }
        let pooled = tape.mul_scalar(pooled.expect("L >= 1"), 1.0 / l as f64);
        let pooled = tape.dropout(pooled, self.config.dropout, training, rng)?;

        // per-node affine head
        let prod = tape.mul(pooled, ids[self.w_head()])?;
        let summed = tape.row_sum(prod);
        Ok(tape.add(summed, ids[self.b_head()])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::build_random;
    use crate::models::{Family, Forecaster};
    use ndarray::Array2;

    #[test]
    fn degenerate_single_order_single_step_runs() {
        // K=1 keeps only the identity support; L=1 collapses attention
        let v = 4;
        let g = build_random(v, 1.0, 1).unwrap();
        let mut cfg = ModelConfig::new(Family::StAttCheb, v, 1);
        cfg.cheb_k = 1;
        cfg.hidden = 4;
        let m = Forecaster::new(&cfg, Some(&g), 2).unwrap();
        let out = m.predict(&Array2::ones((1, v))).unwrap();
        assert_eq!(out.len(), v);
        assert!(out.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn attention_maps_row_sum_to_one() {
        // both softmaxes produce stochastic rows; spot-check via a
        // forward trace of a tiny instance
        let v = 3;
        let g = build_random(v, 1.0, 5).unwrap();
        let mut cfg = ModelConfig::new(Family::StAttCheb, v, 3);
        cfg.hidden = 4;
        cfg.dropout = 0.0;
        let m = Forecaster::new(&cfg, Some(&g), 4).unwrap();
        // deterministic eval twice: identical outputs imply the trace is
        // stable; row-sum checks of the softmax op live in the tape tests
        let w = Array2::from_shape_fn((3, v), |(a, b)| ((a + b) as f64).cos());
        assert_eq!(m.predict(&w).unwrap(), m.predict(&w).unwrap());
    }
}
