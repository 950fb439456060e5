//! Forecaster that learns its own directed adjacency from node embeddings
//! while training the shared recurrent graph backbone on top of it. The
//! adjacency is rebuilt inside every forward pass, so gradients flow into
//! the embeddings through the graph convolution itself.

use super::backbone::RecurrentGcnBackbone;
use super::{ModelConfig, ModelError, Param};
use crate::autodiff::{Tape, TensorId};
use crate::graphs::Graph;
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

pub struct GraphLearnModel {
    pub config: ModelConfig,
    backbone: RecurrentGcnBackbone,
    /// E1, E2 (V×d) and Theta1, Theta2 (d×d); backbone params follow
    params: Vec<Param>,
}

const E1: usize = 0;
const E2: usize = 1;
const TH1: usize = 2;
const TH2: usize = 3;
const N_OWN: usize = 4;

/// Raw learned adjacency from embeddings: with M_i = tanh(alpha·E_i·Theta_i),
/// A = relu(tanh(alpha·(M1·M2ᵀ − M2·M1ᵀ))). The difference is
/// skew-symmetric, so the diagonal is exactly zero and at most one of
/// (i,j)/(j,i) survives the relu.
pub fn learn_graph(
    e1: &Array2<f64>,
    e2: &Array2<f64>,
    th1: &Array2<f64>,
    th2: &Array2<f64>,
    alpha: f64,
) -> Array2<f64> {
    let m1 = e1.dot(th1).mapv(|x| (alpha * x).tanh());
    let m2 = e2.dot(th2).mapv(|x| (alpha * x).tanh());
    let d = m1.dot(&m2.t()) - m2.dot(&m1.t());
    d.mapv(|x| (alpha * x).tanh().max(0.0))
}

/// Per-row top-k retention mask. Ties keep the lower column index.
fn topk_mask(a: &Array2<f64>, k: usize) -> Array2<f64> {
    let v = a.nrows();
    let mut mask = Array2::zeros((v, v));
    for i in 0..v {
        let mut cols: Vec<usize> = (0..v).collect();
        cols.sort_by(|&x, &y| {
            a[(i, y)]
                .partial_cmp(&a[(i, x)])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.cmp(&y))
        });
        for &j in cols.iter().take(k.min(v)) {
            mask[(i, j)] = 1.0;
        }
    }
    mask
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// (eigenvalues, eigenvectors as columns); only used at init time on
/// small V×V matrices.
fn jacobi_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Rank-d spectral factor of a symmetric adjacency: columns of
/// U·sqrt(|Λ|) for the d eigenpairs of largest magnitude, zero-padded
/// when d exceeds V.
fn spectral_embedding(w: &Array2<f64>, d: usize) -> Array2<f64> {
    let v = w.nrows();
    let (vals, vecs) = jacobi_eigen(w);
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&x, &y| {
        vals[y]
            .abs()
            .partial_cmp(&vals[x].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut e = Array2::zeros((v, d));
    for (col, &idx) in order.iter().take(d.min(v)).enumerate() {
        let scale = vals[idx].abs().sqrt();
        for row in 0..v {
            e[(row, col)] = vecs[(row, idx)] * scale;
        }
    }
    e
}

impl GraphLearnModel {
    /// With a seed graph, both embedding banks start from its spectral
    /// factor and the mixing matrices stay random, so the initial learned
    /// adjacency reflects the graph without freezing it. Without one,
    /// everything is random.
    pub fn new(config: &ModelConfig, graph: Option<&Graph>, rng: &mut ChaCha8Rng) -> Self {
        let (v, d) = (config.n_vars, config.embed_dim);
        let mut params = Vec::with_capacity(N_OWN);
        match graph {
            Some(g) => {
                let e = spectral_embedding(&g.weights, d);
                params.push(Param::from_value("embed_1", e.clone()));
                params.push(Param::from_value("embed_2", e));
            }
            None => {
                params.push(Param::uniform("embed_1", (v, d), d, rng));
                params.push(Param::uniform("embed_2", (v, d), d, rng));
            }
        }
        params.push(Param::uniform("theta_1", (d, d), d, rng));
        params.push(Param::uniform("theta_2", (d, d), d, rng));
        Self {
            config: config.clone(),
            backbone: RecurrentGcnBackbone::new(config, rng),
            params,
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.params
            .iter()
            .chain(self.backbone.params().into_iter().map(|p| &*p))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.params.iter_mut().collect();
        out.extend(self.backbone.params_mut());
        out
    }

    /// The learned adjacency after top-k sparsification, from current
    /// parameter values.
    pub fn current_adjacency(&self) -> Array2<f64> {
        let a = learn_graph(
            &self.params[E1].value,
            &self.params[E2].value,
            &self.params[TH1].value,
            &self.params[TH2].value,
            self.config.alpha,
        );
        let mask = topk_mask(&a, self.config.effective_topk());
        a * &mask
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        ids: &[TensorId],
        window: &Array2<f64>,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId, ModelError> {
        let v = self.config.n_vars;
        let alpha = self.config.alpha;

        // learned adjacency, on-tape
        let p1 = tape.matmul(ids[E1], ids[TH1])?;
        let m1 = {
            let s = tape.mul_scalar(p1, alpha);
            tape.tanh(s)
        };
        let p2 = tape.matmul(ids[E2], ids[TH2])?;
        let m2 = {
            let s = tape.mul_scalar(p2, alpha);
            tape.tanh(s)
        };
        let m2t = tape.transpose(m2);
        let m1t = tape.transpose(m1);
        let fwd = tape.matmul(m1, m2t)?;
        let bwd = tape.matmul(m2, m1t)?;
        let diff = tape.sub(fwd, bwd)?;
        let scaled = tape.mul_scalar(diff, alpha);
        let squashed = tape.tanh(scaled);
        let a = tape.relu(squashed);

        // sparsify: gradient flows only through retained entries
        let mask = topk_mask(tape.value(a), self.config.effective_topk());
        let a_sparse = tape.mask_mul(a, mask)?;

        // degree-normalize on-tape so embedding gradients pass through
        let eye = tape.constant(Array2::eye(v));
        let a_tilde = tape.add(a_sparse, eye)?;
        let deg = tape.row_sum(a_tilde);
        let d_inv_sqrt = tape.powf(deg, -0.5);
        let rows_scaled = tape.mul_colvec(a_tilde, d_inv_sqrt)?;
        let d_row = tape.transpose(d_inv_sqrt);
        let a_hat = tape.mul_rowvec(rows_scaled, d_row)?;

        self.backbone.forward(
            tape,
            &ids[N_OWN..],
            a_hat,
            window,
            self.config.dropout,
            training,
            rng,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::build_random;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    #[test]
    fn learned_adjacency_is_nonnegative_with_zero_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e1 = Array2::from_shape_fn((6, 4), |_| rng.gen_range(-1.0..1.0));
        let e2 = Array2::from_shape_fn((6, 4), |_| rng.gen_range(-1.0..1.0));
        let t1 = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-1.0..1.0));
        let t2 = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-1.0..1.0));
        let a = learn_graph(&e1, &e2, &t1, &t2, 3.0);
        for i in 0..6 {
            assert_eq!(a[(i, i)], 0.0);
            for j in 0..6 {
                assert!(a[(i, j)] >= 0.0);
                // skew-symmetry of the pre-activation: both directions
                // cannot be positive at once
                if i != j && a[(i, j)] > 0.0 {
                    assert_eq!(a[(j, i)], 0.0);
                }
            }
        }
    }

    #[test]
    fn topk_mask_keeps_k_per_row() {
        let a = array![[0.0, 0.9, 0.1, 0.5], [0.2, 0.0, 0.2, 0.7], [
            0.0, 0.0, 0.0, 0.0
        ], [0.3, 0.3, 0.3, 0.0]];
        let m = topk_mask(&a, 2);
        for i in 0..4 {
            assert_eq!(m.row(i).sum(), 2.0);
        }
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(0, 3)], 1.0);
        // ties broken toward the lower index
        assert_eq!(m[(3, 0)], 1.0);
        assert_eq!(m[(3, 1)], 1.0);
    }

    #[test]
    fn jacobi_recovers_diagonal_matrix() {
        let m = array![[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.5]];
        let (vals, vecs) = jacobi_eigen(&m);
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(sorted[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sorted[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sorted[2], 3.0, epsilon = 1e-12);
        // eigenvectors of a diagonal matrix are the standard basis
        for j in 0..3 {
            let col_norm: f64 = (0..3).map(|i| vecs[(i, j)] * vecs[(i, j)]).sum();
            assert_abs_diff_eq!(col_norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 5;
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-2.0..2.0);
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
            let (vals, vecs) = jacobi_eigen(&m);
            // V · diag(vals) · Vᵀ should reproduce m
            let mut lam = Array2::zeros((n, n));
            for i in 0..n {
                lam[(i, i)] = vals[i];
            }
            let rebuilt = vecs.dot(&lam).dot(&vecs.t());
            for i in 0..n {
                for j in 0..n {
                    assert_abs_diff_eq!(rebuilt[(i, j)], m[(i, j)], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn full_rank_spectral_embedding_reconstructs_adjacency() {
        let g = build_random(5, 0.8, 9).unwrap();
        let e = spectral_embedding(&g.weights, 5);
        // E·Eᵀ recovers |W| only when W is PSD; instead check the factor
        // spans the same energy: ‖E‖_F² = Σ|λ| = trace of |Λ|
        let frob: f64 = e.iter().map(|x| x * x).sum();
        let (vals, _) = jacobi_eigen(&g.weights);
        let total: f64 = vals.iter().map(|x| x.abs()).sum();
        assert_abs_diff_eq!(frob, total, epsilon = 1e-8);
    }

    #[test]
    fn graph_seeded_embeddings_start_equal() {
        let g = build_random(6, 0.5, 2).unwrap();
        let cfg = ModelConfig::new(super::super::Family::GraphLearn, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = GraphLearnModel::new(&cfg, Some(&g), &mut rng);
        assert_eq!(m.params[E1].value, m.params[E2].value);
        // mixing matrices differ, so the learned adjacency is not frozen
        assert_ne!(m.params[TH1].value, m.params[TH2].value);
    }

    #[test]
    fn current_adjacency_respects_topk() {
        let cfg = ModelConfig::new(super::super::Family::GraphLearn, 10, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = GraphLearnModel::new(&cfg, None, &mut rng);
        let a = m.current_adjacency();
        let k = cfg.effective_topk();
        for i in 0..10 {
            let nonzero = a.row(i).iter().filter(|x| **x > 0.0).count();
            assert!(nonzero <= k, "row {i} has {nonzero} > {k} entries");
        }
    }
}
