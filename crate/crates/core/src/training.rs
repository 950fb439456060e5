//! Full-batch gradient training of a forecaster on one individual's
//! windows: every epoch builds a fresh tape, runs all windows forward,
//! averages the squared error, backpropagates once, and takes an Adam
//! step. Divergence aborts with the epoch it happened in.

use crate::autodiff::{Adam, AdError, Tape};
use crate::data::WindowedSamples;
use crate::models::{Forecaster, ModelError};
use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Ad(#[from] AdError),
    #[error("no windows to train on")]
    EmptyData,
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// global gradient-norm clip; `None` disables clipping
    pub clip_norm: Option<f64>,
    /// seeds the per-epoch dropout masks
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.01,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// training loss after each epoch's forward pass
    pub curve: Vec<f64>,
    pub final_loss: f64,
}

/// Mean squared error over a batch of prediction/target vector pairs:
/// the average of (pred − target)² across every window and variable.
pub fn mse(preds: &[Array1<f64>], targets: &[Array1<f64>]) -> f64 {
    assert_eq!(preds.len(), targets.len(), "batch size mismatch");
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, t) in preds.iter().zip(targets) {
        assert_eq!(p.len(), t.len(), "vector length mismatch");
        for (a, b) in p.iter().zip(t.iter()) {
            total += (a - b) * (a - b);
        }
        count += p.len();
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

pub fn train(
    model: &mut Forecaster,
    data: &WindowedSamples,
    config: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    if data.inputs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let shapes: Vec<(usize, usize)> = model.params().iter().map(|p| p.shape()).collect();
    let mut adam = Adam::new(config.lr, &shapes);
    let mut curve = Vec::with_capacity(config.epochs);
    let n_windows = data.inputs.len();

    for epoch in 0..config.epochs {
        let mut tape = Tape::new();
        let ids = model.bind(&mut tape);
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(
            config.seed,
            &[crate::seed::label("dropout"), epoch as u64],
        ));

        // mean over all windows and variables of the squared error
        let mut loss_sum = None;
        for (window, target) in data.inputs.iter().zip(&data.targets) {
            let pred = model.forward_bound(&mut tape, &ids, window, true, &mut rng)?;
            let t = tape.constant(
                ndarray::Array2::from_shape_fn((target.len(), 1), |(i, _)| target[i]),
            );
            let diff = tape.sub(pred, t)?;
            let sq = tape.mul(diff, diff)?;
            let m = tape.mean(sq);
            loss_sum = Some(match loss_sum {
                Some(acc) => tape.add(acc, m)?,
                None => m,
            });
        }
        let loss = tape.mul_scalar(loss_sum.expect("non-empty batch"), 1.0 / n_windows as f64);
        let loss_value = tape.value(loss)[(0, 0)];
        if !loss_value.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        curve.push(loss_value);

        tape.backward(loss)?;
        model.collect_grads(&tape, &ids);
        if let Some(max_norm) = config.clip_norm {
            clip_global_norm(model, max_norm);
        }

        let mut params = model.params_mut();
        let grads: Vec<ndarray::Array2<f64>> = params.iter().map(|p| p.grad.clone()).collect();
        let mut value_refs: Vec<&mut ndarray::Array2<f64>> =
            params.iter_mut().map(|p| &mut p.value).collect();
        let grad_refs: Vec<&ndarray::Array2<f64>> = grads.iter().collect();
        adam.step(&mut value_refs, &grad_refs)
            .expect("shapes fixed at construction");
    }

    let final_loss = *curve.last().expect("epochs >= 1");
    Ok(TrainReport { curve, final_loss })
}

/// Scale all gradients down so their joint L2 norm is at most `max_norm`.
fn clip_global_norm(model: &mut Forecaster, max_norm: f64) {
    let total: f64 = model
        .params()
        .iter()
        .map(|p| p.grad.iter().map(|g| g * g).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if total > max_norm && total > 0.0 {
        let scale = max_norm / total;
        for p in model.params_mut() {
            p.grad.mapv_inplace(|g| g * scale);
        }
    }
}

/// Eval-mode mean squared error of the model over a window set.
pub fn evaluate(model: &Forecaster, data: &WindowedSamples) -> Result<f64, TrainError> {
    if data.inputs.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut preds = Vec::with_capacity(data.inputs.len());
    for window in &data.inputs {
        preds.push(model.predict(window)?);
    }
    Ok(mse(&preds, &data.targets))
}
