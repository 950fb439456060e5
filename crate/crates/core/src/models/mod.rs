//! Four forecaster families mapping an L×V input window to a V-vector
//! 1-lag prediction: an LSTM baseline, a recurrent graph convolution with
//! temporal attention, a spatio-temporal attention model with Chebyshev
//! graph convolution, and a graph-learning forecaster that adapts its
//! adjacency during training.

mod backbone;
mod checkpoint;
mod graph_learn;
mod lstm;
mod param;
mod st_att_cheb;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use graph_learn::{learn_graph, GraphLearnModel};
pub use lstm::LstmModel;
pub use param::Param;
pub use st_att_cheb::StAttChebModel;

use crate::autodiff::{AdError, Tape, TensorId};
use crate::graphs::{Graph, Metric, NormalizedGraph};
use backbone::RecurrentGcnBackbone;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{0}")]
    Ad(#[from] AdError),
    #[error("family {0:?} requires a static graph")]
    MissingGraph(Family),
    #[error("graph has {graph} nodes but the model expects {expected}")]
    GraphSizeMismatch { graph: usize, expected: usize },
    #[error("window has {got} variables, model expects {expected}")]
    BadWindowWidth { got: usize, expected: usize },
    #[error("top-k {topk} exceeds node count {v}")]
    BadTopK { topk: usize, v: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Lstm,
    RgcnAtt,
    StAttCheb,
    GraphLearn,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Lstm => "LSTM",
            Family::RgcnAtt => "RGCN_ATT",
            Family::StAttCheb => "ST_ATT_CHEB",
            Family::GraphLearn => "GRAPH_LEARN",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub n_vars: usize,
    pub seq_len: usize,
    pub hidden: usize,
    pub cheb_k: usize,
    pub dropout: f64,
    pub embed_dim: usize,
    pub alpha: f64,
    /// per-row sparsity of the learned graph; defaults to round(0.2·V)
    pub topk: Option<usize>,
}

impl ModelConfig {
    pub fn new(family: Family, n_vars: usize, seq_len: usize) -> Self {
        Self {
            family,
            n_vars,
            seq_len,
            hidden: 32,
            cheb_k: 3,
            dropout: 0.3,
            embed_dim: 8,
            alpha: 3.0,
            topk: None,
        }
    }

    pub fn effective_topk(&self) -> usize {
        self.topk
            .unwrap_or(((0.2 * self.n_vars as f64).round() as usize).max(1))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 {
            return Err(ModelError::InvalidConfig("hidden must be > 0".into()));
        }
        if self.cheb_k == 0 {
            return Err(ModelError::InvalidConfig("cheb_k must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.seq_len == 0 {
            return Err(ModelError::InvalidConfig("seq_len must be >= 1".into()));
        }
        if self.effective_topk() > self.n_vars {
            return Err(ModelError::BadTopK {
                topk: self.effective_topk(),
                v: self.n_vars,
            });
        }
        Ok(())
    }
}

/// A parameterized forecaster of one of the four families.
pub enum Forecaster {
    Lstm(LstmModel),
    RgcnAtt {
        config: ModelConfig,
        graph: NormalizedGraph,
        backbone: RecurrentGcnBackbone,
    },
    StAttCheb(StAttChebModel),
    GraphLearn(GraphLearnModel),
}

impl Forecaster {
    /// Build a model with seeded uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)]
    /// initialization. Graph-consuming families normalize the provided
    /// graph once up front; GraphLearn optionally seeds its embeddings
    /// from a rank-embed_dim factorization of the graph.
    pub fn new(config: &ModelConfig, graph: Option<&Graph>, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        if let Some(g) = graph {
            if g.n_nodes() != config.n_vars {
                return Err(ModelError::GraphSizeMismatch {
                    graph: g.n_nodes(),
                    expected: config.n_vars,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match config.family {
            Family::Lstm => Ok(Forecaster::Lstm(LstmModel::new(config, &mut rng))),
            Family::RgcnAtt => {
                let g = graph.ok_or(ModelError::MissingGraph(Family::RgcnAtt))?;
                Ok(Forecaster::RgcnAtt {
                    config: config.clone(),
                    graph: crate::graphs::normalize(g, None),
                    backbone: RecurrentGcnBackbone::new(config, &mut rng),
                })
            }
            Family::StAttCheb => {
                let g = graph.ok_or(ModelError::MissingGraph(Family::StAttCheb))?;
                Ok(Forecaster::StAttCheb(StAttChebModel::new(
                    config,
                    crate::graphs::normalize(g, Some(config.cheb_k)),
                    &mut rng,
                )))
            }
            Family::GraphLearn => Ok(Forecaster::GraphLearn(GraphLearnModel::new(
                config, graph, &mut rng,
            ))),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Forecaster::Lstm(_) => Family::Lstm,
            Forecaster::RgcnAtt { .. } => Family::RgcnAtt,
            Forecaster::StAttCheb(_) => Family::StAttCheb,
            Forecaster::GraphLearn(_) => Family::GraphLearn,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        match self {
            Forecaster::Lstm(m) => &m.config,
            Forecaster::RgcnAtt { config, .. } => config,
            Forecaster::StAttCheb(m) => &m.config,
            Forecaster::GraphLearn(m) => &m.config,
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Forecaster::Lstm(m) => m.params(),
            Forecaster::RgcnAtt { backbone, .. } => backbone.params(),
            Forecaster::StAttCheb(m) => m.params(),
            Forecaster::GraphLearn(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Forecaster::Lstm(m) => m.params_mut(),
            Forecaster::RgcnAtt { backbone, .. } => backbone.params_mut(),
            Forecaster::StAttCheb(m) => m.params_mut(),
            Forecaster::GraphLearn(m) => m.params_mut(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Insert all parameters as trainable leaves; ids align with
    /// [`Forecaster::params`] order.
    pub fn bind(&self, tape: &mut Tape) -> Vec<TensorId> {
        self.params()
            .iter()
            .map(|p| tape.leaf(p.value.clone()))
            .collect()
    }

    /// Forward pass for one window using previously bound parameter ids.
    /// Output is V×1.
    pub fn forward_bound(
        &self,
        tape: &mut Tape,
        ids: &[TensorId],
        window: &Array2<f64>,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId, ModelError> {
        let v = self.config().n_vars;
        if window.ncols() != v {
            return Err(ModelError::BadWindowWidth {
                got: window.ncols(),
                expected: v,
            });
        }
        match self {
            Forecaster::Lstm(m) => m.forward(tape, ids, window, training, rng),
            Forecaster::RgcnAtt {
                config,
                graph,
                backbone,
            } => {
                let a_hat = tape.constant(graph.a_hat.clone());
                backbone.forward(tape, ids, a_hat, window, config.dropout, training, rng)
            }
            Forecaster::StAttCheb(m) => m.forward(tape, ids, window, training, rng),
            Forecaster::GraphLearn(m) => m.forward(tape, ids, window, training, rng),
        }
    }

    /// Eval-mode prediction on a fresh tape; deterministic.
    pub fn predict(&self, window: &Array2<f64>) -> Result<Array1<f64>, ModelError> {
        let mut tape = Tape::new();
        let ids = self.bind(&mut tape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = self.forward_bound(&mut tape, &ids, window, false, &mut rng)?;
        let v = tape.value(out);
        Ok(Array1::from_iter(v.iter().cloned()))
    }

    /// Copy gradients off the tape into the parameters, in bind order.
    /// Parameters the loss never touched get zero gradients.
    pub fn collect_grads(&mut self, tape: &Tape, ids: &[TensorId]) {
        for (p, id) in self.params_mut().into_iter().zip(ids) {
            match tape.grad(*id) {
                Some(g) => p.grad.assign(g),
                None => p.grad.fill(0.0),
            }
        }
    }

    /// The current learned adjacency (post top-k, pre normalization),
    /// symmetrized for consumption by static-graph models. Only
    /// meaningful for the GraphLearn family.
    pub fn extract_learned_graph(&self, node_names: Vec<String>) -> Option<Graph> {
        match self {
            Forecaster::GraphLearn(m) => {
                let a = m.current_adjacency();
                let v = a.nrows();
                let mut w = Array2::zeros((v, v));
                for i in 0..v {
                    for j in 0..v {
                        if i != j {
                            w[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
                        }
                    }
                }
                let pairs = (v * (v - 1) / 2) as f64;
                let mut edges = 0usize;
                for i in 0..v {
                    for j in (i + 1)..v {
                        if w[(i, j)] > 0.0 {
                            edges += 1;
                        }
                    }
                }
                Some(Graph::new(
                    w,
                    Metric::Learned,
                    if pairs > 0.0 { edges as f64 / pairs } else { 1.0 },
                    None,
                    node_names,
                ))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::graphs::build_random;
    use rand::Rng;

    fn window(l: usize, v: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((l, v), |_| rng.gen_range(-1.5..1.5))
    }

    fn all_families() -> Vec<Family> {
        vec![
            Family::Lstm,
            Family::RgcnAtt,
            Family::StAttCheb,
            Family::GraphLearn,
        ]
    }

    #[test]
    fn output_shape_is_v_for_all_families_and_lengths() {
        let v = 5;
        let g = build_random(v, 0.6, 3).unwrap();
        for family in all_families() {
            for l in [1usize, 2, 5] {
                let mut cfg = ModelConfig::new(family, v, l);
                cfg.hidden = 8;
                let m = Forecaster::new(&cfg, Some(&g), 1).unwrap();
                let out = m.predict(&window(l, v, 42)).unwrap();
                assert_eq!(out.len(), v, "{family} L={l}");
            }
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let v = 4;
        let g = build_random(v, 0.8, 3).unwrap();
        for family in all_families() {
            let mut cfg = ModelConfig::new(family, v, 2);
            cfg.hidden = 6;
            let m = Forecaster::new(&cfg, Some(&g), 7).unwrap();
            let w = window(2, v, 9);
            let a = m.predict(&w).unwrap();
            let b = m.predict(&w).unwrap();
            assert_eq!(a, b, "{family}");
        }
    }

    #[test]
    fn same_seed_same_init() {
        let v = 4;
        let g = build_random(v, 0.8, 3).unwrap();
        let cfg = ModelConfig::new(Family::RgcnAtt, v, 2);
        let a = Forecaster::new(&cfg, Some(&g), 5).unwrap();
        let b = Forecaster::new(&cfg, Some(&g), 5).unwrap();
        for (x, y) in a.params().iter().zip(b.params().iter()) {
            assert_eq!(x.value, y.value);
        }
    }

    #[test]
    fn missing_graph_rejected() {
        let cfg = ModelConfig::new(Family::RgcnAtt, 4, 2);
        assert!(matches!(
            Forecaster::new(&cfg, None, 1),
            Err(ModelError::MissingGraph(_))
        ));
        let cfg = ModelConfig::new(Family::StAttCheb, 4, 2);
        assert!(Forecaster::new(&cfg, None, 1).is_err());
    }

    #[test]
    fn graph_size_mismatch_rejected() {
        let g = build_random(5, 0.5, 1).unwrap();
        let cfg = ModelConfig::new(Family::RgcnAtt, 4, 2);
        assert!(matches!(
            Forecaster::new(&cfg, Some(&g), 1),
            Err(ModelError::GraphSizeMismatch { .. })
        ));
    }

    #[test]
    fn rgcn_equivariant_under_node_permutation() {
        // permuting graph + window + per-node head params permutes outputs
        let v = 5;
        let l = 3;
        let g = build_random(v, 0.6, 13).unwrap();
        let mut cfg = ModelConfig::new(Family::RgcnAtt, v, l);
        cfg.hidden = 6;
        cfg.dropout = 0.0;
        let m = Forecaster::new(&cfg, Some(&g), 3).unwrap();
        let w = window(l, v, 21);
        let out = m.predict(&w).unwrap();

        let perm: Vec<usize> = vec![2, 0, 4, 1, 3];
        let mut gp = g.clone();
        gp.weights = Array2::from_shape_fn((v, v), |(i, j)| g.weights[(perm[i], perm[j])]);
        let mut mp = Forecaster::new(&cfg, Some(&gp), 3).unwrap();
        // copy params from m, permuting the per-node head rows
        {
            let src: Vec<Array2<f64>> = m.params().iter().map(|p| p.value.clone()).collect();
            let names: Vec<String> = m.params().iter().map(|p| p.name.clone()).collect();
            for (dst, (val, name)) in mp.params_mut().into_iter().zip(src.into_iter().zip(names)) {
                if name == "w_head" || name == "b_head" {
                    let permuted =
                        Array2::from_shape_fn(val.dim(), |(i, j)| val[(perm[i], j)]);
                    dst.value = permuted;
                } else {
                    dst.value = val;
                }
            }
        }
        let wp = Array2::from_shape_fn((l, v), |(t, i)| w[(t, perm[i])]);
        let outp = mp.predict(&wp).unwrap();
        for i in 0..v {
            assert_abs_diff_eq!(outp[i], out[perm[i]], epsilon = 1e-9);
        }
    }

    #[test]
    fn st_att_finite_on_random_inputs() {
        let v = 5;
        let g = build_random(v, 0.6, 17).unwrap();
        let mut cfg = ModelConfig::new(Family::StAttCheb, v, 4);
        cfg.hidden = 6;
        let m = Forecaster::new(&cfg, Some(&g), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..1000 {
            let w = Array2::from_shape_fn((4, v), |_| rng.gen_range(-3.0..3.0));
            let out = m.predict(&w).unwrap();
            assert!(out.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn extract_learned_graph_satisfies_invariants_and_feeds_back() {
        let v = 6;
        let cfg = ModelConfig::new(Family::GraphLearn, v, 2);
        let m = Forecaster::new(&cfg, None, 4).unwrap();
        let names: Vec<String> = (1..=v).map(|i| format!("var_{i}")).collect();
        let g = m.extract_learned_graph(names).unwrap();
        assert_eq!(g.metric, Metric::Learned);
        for i in 0..v {
            assert_eq!(g.weights[(i, i)], 0.0);
            for j in 0..v {
                assert!(g.weights[(i, j)] >= 0.0);
                assert_abs_diff_eq!(g.weights[(i, j)], g.weights[(j, i)], epsilon = 1e-15);
            }
        }
        // the exported graph is a valid static input
        let cfg2 = ModelConfig::new(Family::RgcnAtt, v, 2);
        let m2 = Forecaster::new(&cfg2, Some(&g), 5).unwrap();
        assert!(m2.predict(&window(2, v, 8)).is_ok());
    }
}
