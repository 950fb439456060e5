//! Baseline single-layer LSTM over the window, final hidden state through
//! an affine head to V outputs.

use super::{ModelConfig, ModelError, Param};
use crate::autodiff::{Tape, TensorId};
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

pub struct LstmModel {
    pub config: ModelConfig,
    params: Vec<Param>,
}

const W_XI: usize = 0;
const W_HI: usize = 1;
const B_I: usize = 2;
const W_XF: usize = 3;
const W_HF: usize = 4;
const B_F: usize = 5;
const W_XG: usize = 6;
const W_HG: usize = 7;
const B_G: usize = 8;
const W_XO: usize = 9;
const W_HO: usize = 10;
const B_O: usize = 11;
const W_HEAD: usize = 12;
const B_HEAD: usize = 13;

impl LstmModel {
    pub fn new(config: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let (v, h) = (config.n_vars, config.hidden);
        let gate = |name: &str, rng: &mut ChaCha8Rng| {
            vec![
                Param::uniform(&format!("w_x{name}"), (v, h), v, rng),
                Param::uniform(&format!("w_h{name}"), (h, h), h, rng),
                Param::zeros(&format!("b_{name}"), (1, h)),
            ]
        };
        let mut params = Vec::new();
        params.extend(gate("i", rng));
        params.extend(gate("f", rng));
        params.extend(gate("g", rng));
        params.extend(gate("o", rng));
        params.push(Param::uniform("w_head", (h, v), h, rng));
        params.push(Param::zeros("b_head", (1, v)));
        Self {
            config: config.clone(),
            params,
        }
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
        let hdim = self.config.hidden;
        let mut h = tape.constant(Array2::zeros((1, hdim)));
        let mut c = tape.constant(Array2::zeros((1, hdim)));
        for t in 0..l {
            let x = tape.constant(Array2::from_shape_fn((1, v), |(_, j)| window[(t, j)]));
            let gate = |tape: &mut Tape, wx: usize, wh: usize, b: usize| -> Result<TensorId, ModelError> {
                let a = tape.matmul(x, ids[wx])?;
                let bb = tape.matmul(h, ids[wh])?;
                let s = tape.add(a, bb)?;
                Ok(tape.add(s, ids[b])?)
            };
            let i = {
                let s = gate(tape, W_XI, W_HI, B_I)?;
                tape.sigmoid(s)
            };
            let f = {
                let s = gate(tape, W_XF, W_HF, B_F)?;
                tape.sigmoid(s)
            };
            let g = {
                let s = gate(tape, W_XG, W_HG, B_G)?;
                tape.tanh(s)
            };
            let o = {
                let s = gate(tape, W_XO, W_HO, B_O)?;
                tape.sigmoid(s)
            };
            let fc = tape.mul(f, c)?;
            let ig = tape.mul(i, g)?;
            c = tape.add(fc, ig)?;
            let tc = tape.tanh(c);
            h = tape.mul(o, tc)?;
        }
        let h = tape.dropout(h, self.config.dropout, training, rng)?;
        let proj = tape.matmul(h, ids[W_HEAD])?;
        let out_row = tape.add(proj, ids[B_HEAD])?;
        Ok(tape.transpose(out_row))
    }
}
