//! Model checkpoints: a single JSON document holding the config plus every
//! parameter tensor. Values survive a save/load cycle bit-for-bit.

use super::{Forecaster, ModelConfig, ModelError};
use crate::graphs::Graph;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct StoredParam {
    name: String,
    shape: (usize, usize),
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: ModelConfig,
    params: Vec<StoredParam>,
}

pub fn save_checkpoint(model: &Forecaster, path: &Path) -> Result<(), ModelError> {
    let params = model
        .params()
        .iter()
        .map(|p| StoredParam {
            name: p.name.clone(),
            shape: p.shape(),
            data: p.value.iter().cloned().collect(),
        })
        .collect();
    let ckpt = Checkpoint {
        config: model.config().clone(),
        params,
    };
    fs::write(path, serde_json::to_string_pretty(&ckpt)?)?;
    Ok(())
}

/// Rebuild a model from a checkpoint. Families that convolve over a static
/// graph need the same graph passed back in; the stored parameters then
/// replace the freshly initialized ones.
pub fn load_checkpoint(path: &Path, graph: Option<&Graph>) -> Result<Forecaster, ModelError> {
    let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
    let mut model = Forecaster::new(&ckpt.config, graph, 0)?;
    {
        let params = model.params_mut();
        if params.len() != ckpt.params.len() {
            return Err(ModelError::Checkpoint(format!(
                "stored {} tensors, model has {}",
                ckpt.params.len(),
                params.len()
            )));
        }
        for (p, s) in params.into_iter().zip(ckpt.params) {
            if p.name != s.name || p.shape() != s.shape {
                return Err(ModelError::Checkpoint(format!(
                    "tensor mismatch: expected {} {:?}, found {} {:?}",
                    p.name,
                    p.shape(),
                    s.name,
                    s.shape
                )));
            }
            p.value = Array2::from_shape_vec(s.shape, s.data)
                .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        }
    }
    Ok(model)
}
