//! Shared recurrent backbone: per-step node-wise GCN features, a GRU cell
//! over per-node hidden states, temporal attention across the window, and
//! a per-node affine head. Used directly by the RgcnAtt family and reused
//! by GraphLearn over its learned adjacency.

use super::{ModelConfig, ModelError, Param};
use crate::autodiff::{Tape, TensorId};
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

pub struct RecurrentGcnBackbone {
    pub n_vars: usize,
    pub hidden: usize,
    params: Vec<Param>,
}

// parameter order within `params`
const W_G: usize = 0;
const W_S: usize = 1;
const B_G: usize = 2;
const W_XZ: usize = 3;
const W_HZ: usize = 4;
const B_Z: usize = 5;
const W_XR: usize = 6;
const W_HR: usize = 7;
const B_R: usize = 8;
const W_XH: usize = 9;
const W_HH: usize = 10;
const B_H: usize = 11;
const ATTN: usize = 12;
const W_HEAD: usize = 13;
const B_HEAD: usize = 14;

impl RecurrentGcnBackbone {
    pub fn new(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let (v, h) = (config.n_vars, config.hidden);
        let params = vec![
            Param::uniform("w_g", (1, h), 1, rng),
            Param::uniform("w_s", (1, h), 1, rng),
            Param::zeros("b_g", (1, h)),
            Param::uniform("w_xz", (h, h), h, rng),
            Param::uniform("w_hz", (h, h), h, rng),
            Param::zeros("b_z", (1, h)),
            Param::uniform("w_xr", (h, h), h, rng),
            Param::uniform("w_hr", (h, h), h, rng),
            Param::zeros("b_r", (1, h)),
            Param::uniform("w_xh", (h, h), h, rng),
            Param::uniform("w_hh", (h, h), h, rng),
            Param::zeros("b_h", (1, h)),
            Param::uniform("attn", (h, 1), h, rng),
            Param::uniform("w_head", (v, h), h, rng),
            Param::zeros("b_head", (v, 1)),
        ];
        Self {
            n_vars: v,
            hidden: h,
            params,
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.params.iter().collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.params.iter_mut().collect()
    }

    /// Forward one window over an already-inserted normalized adjacency.
    /// `ids` must align with `params()` order (callers embedding this
    /// backbone pass a slice offset past their own parameters).
    #[allow(clippy::too_many_arguments)]
    pub fn forward(
        &self,
        tape: &mut Tape,
        ids: &[TensorId],
        a_hat: TensorId,
        window: &Array2<f64>,
        dropout: f64,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId, ModelError> {
        let (l, v) = window.dim();
        let h = tape.constant(Array2::zeros((self.n_vars, self.hidden)));
        let mut state = h;
        let mut hiddens = Vec::with_capacity(l);
        for t in 0..l {
            let x_row = tape.constant(Array2::from_shape_fn((1, v), |(_, j)| window[(t, j)]));
            let x_col = tape.transpose(x_row);
            let propagated = tape.matmul(a_hat, x_col)?;
            let feat = tape.matmul(propagated, ids[W_G])?;
            // skip connection: each node also sees its own raw value, not
            // just the graph-smoothed mixture
            let own = tape.matmul(x_col, ids[W_S])?;
            let feat = tape.add(feat, own)?;
            let feat = tape.add_rowvec(feat, ids[B_G])?;
            let feat = tape.relu(feat);
            let feat = tape.dropout(feat, dropout, training, rng)?;

            // GRU cell over per-node states
            let z = {
                let a = tape.matmul(feat, ids[W_XZ])?;
                let b = tape.matmul(state, ids[W_HZ])?;
                let s = tape.add(a, b)?;
                let s = tape.add_rowvec(s, ids[B_Z])?;
                tape.sigmoid(s)
            };
            let r = {
                let a = tape.matmul(feat, ids[W_XR])?;
                let b = tape.matmul(state, ids[W_HR])?;
                let s = tape.add(a, b)?;
                let s = tape.add_rowvec(s, ids[B_R])?;
                tape.sigmoid(s)
            };
            let h_tilde = {
                let a = tape.matmul(feat, ids[W_XH])?;
                let gated = tape.mul(r, state)?;
                let b = tape.matmul(gated, ids[W_HH])?;
                let s = tape.add(a, b)?;
                let s = tape.add_rowvec(s, ids[B_H])?;
                tape.tanh(s)
            };
            let keep = tape.mul(z, state)?;
            let neg_z = tape.mul_scalar(z, -1.0);
            let one_minus_z = tape.add_scalar(neg_z, 1.0);
            let update = tape.mul(one_minus_z, h_tilde)?;
            state = tape.add(keep, update)?;
            hiddens.push(state);
        }

        // temporal attention over the L hidden states
        let scores: Vec<TensorId> = hiddens
            .iter()
            .map(|&hid| tape.matmul(hid, ids[ATTN]))
            .collect::<Result<_, _>>()?;
        let score_mat = tape.concat_cols(&scores)?;
        let attn = tape.softmax_rows(score_mat);
        let mut context: Option<TensorId> = None;
        for (idx, &hid) in hiddens.iter().enumerate() {
            let w_l = tape.slice_col(attn, idx)?;
            let term = tape.mul_colvec(hid, w_l)?;
            context = Some(match context {
                Some(c) => tape.add(c, term)?,
                None => term,
            });
        }
        let context = context.expect("window has at least one step");
        let context = tape.dropout(context, dropout, training, rng)?;

        // per-node affine head
        let prod = tape.mul(context, ids[W_HEAD])?;
        let summed = tape.row_sum(prod);
        let out = tape.add(summed, ids[B_HEAD])?;
        Ok(out)
    }
}
