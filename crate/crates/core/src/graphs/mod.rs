//! Variable-interaction graph construction from an individual's training
//! segment: Euclidean, kNN, DTW and Pearson-correlation similarity graphs
//! plus random nulls, density-threshold sparsification, normalization for
//! graph convolution, and graph comparison.

mod dtw;
mod io;

pub use dtw::dtw_distance;
pub use io::{load_graph, save_graph, GraphSidecar};

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("need at least 2 variables, got {0}")]
    TooFewVariables(usize),
    #[error("invalid k={k} for {v} nodes (need 1 <= k < V)")]
    InvalidK { k: usize, v: usize },
    #[error("invalid graph density threshold {0}: must be in (0, 1]")]
    InvalidGdt(f64),
    #[error("variable {0} has zero variance on the training segment")]
    ZeroVarianceVariable(String),
    #[error("graph correlation undefined: {0} graph is constant")]
    ConstantGraph(&'static str),
    #[error("graphs have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("series too short: T={0}, need at least 2")]
    TooShort(usize),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("graph csv parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Euc,
    Knn,
    Dtw,
    Corr,
    Rand,
    Learned,
    /// ground-truth adjacency of the synthetic generator
    Planted,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Metric::Euc => "EUC",
            Metric::Knn => "KNN",
            Metric::Dtw => "DTW",
            Metric::Corr => "CORR",
            Metric::Rand => "RAND",
            Metric::Learned => "LEARNED",
            Metric::Planted => "PLANTED",
        };
        f.write_str(s)
    }
}

/// V×V nonnegative weighted adjacency with construction metadata.
#[derive(Debug, Clone)]
pub struct Graph {
    pub weights: Array2<f64>,
    pub metric: Metric,
    pub gdt: f64,
    pub seed: Option<u64>,
    pub node_names: Vec<String>,
}

impl Graph {
    pub fn new(
        weights: Array2<f64>,
        metric: Metric,
        gdt: f64,
        seed: Option<u64>,
        node_names: Vec<String>,
    ) -> Self {
        Self {
            weights,
            metric,
            gdt,
            seed,
            node_names,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    /// Number of undirected edges with nonzero weight.
    pub fn edge_count(&self) -> usize {
        let v = self.n_nodes();
        let mut n = 0;
        for i in 0..v {
            for j in (i + 1)..v {
                if self.weights[(i, j)] != 0.0 || self.weights[(j, i)] != 0.0 {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Â = D^{-1/2}(W+I)D^{-1/2}, plus Chebyshev supports of the scaled
/// Laplacian when a kernel order is requested.
#[derive(Debug, Clone)]
pub struct NormalizedGraph {
    pub a_hat: Array2<f64>,
    pub cheb_supports: Option<Vec<Array2<f64>>>,
}

fn pairwise_euclidean(series: ArrayView2<f64>) -> Array2<f64> {
    let v = series.nrows();
    let mut d = Array2::zeros((v, v));
    for i in 0..v {
        for j in (i + 1)..v {
            let dist: f64 = series
                .row(i)
                .iter()
                .zip(series.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Gaussian affinity with sigma = population std of the off-diagonal
/// distances; bounds weights in (0, 1] and is scale-free.
fn distances_to_affinity(d: &Array2<f64>) -> Array2<f64> {
    let v = d.nrows();
    let mut offdiag = Vec::with_capacity(v * (v - 1));
    for i in 0..v {
        for j in 0..v {
            if i != j {
                offdiag.push(d[(i, j)]);
            }
        }
    }
    let n = offdiag.len() as f64;
    let mean = offdiag.iter().sum::<f64>() / n;
    let sigma = (offdiag.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let s2 = if sigma > 0.0 { sigma * sigma } else { 1.0 };
    let mut w = Array2::zeros((v, v));
    for i in 0..v {
        for j in 0..v {
            if i != j {
                w[(i, j)] = (-d[(i, j)] * d[(i, j)] / s2).exp();
            }
        }
    }
    w
}

fn default_names(v: usize) -> Vec<String> {
    (1..=v).map(|i| format!("var_{i}")).collect()
}

/// Euclidean-distance affinity graph over variable rows.
pub fn build_euclidean(
    series_train: ArrayView2<f64>,
    node_names: Option<Vec<String>>,
) -> Result<Graph, GraphError> {
    let v = series_train.nrows();
    if v < 2 {
        return Err(GraphError::TooFewVariables(v));
    }
    let d = pairwise_euclidean(series_train);
    let w = distances_to_affinity(&d);
    Ok(Graph::new(
        w,
        Metric::Euc,
        1.0,
        None,
        node_names.unwrap_or_else(|| default_names(v)),
    ))
}

/// kNN graph: each node keeps its k nearest (smallest Euclidean distance)
/// neighbors; union-symmetrized; kept edges carry the Gaussian affinity.
pub fn build_knn(
    series_train: ArrayView2<f64>,
    k: usize,
    node_names: Option<Vec<String>>,
) -> Result<Graph, GraphError> {
    let v = series_train.nrows();
    if v < 2 {
        return Err(GraphError::TooFewVariables(v));
    }
    if k == 0 || k >= v {
        return Err(GraphError::InvalidK { k, v });
    }
    let d = pairwise_euclidean(series_train);
    let aff = distances_to_affinity(&d);
    let mut keep = Array2::from_elem((v, v), false);
    for i in 0..v {
        let mut order: Vec<usize> = (0..v).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            d[(i, a)]
                .partial_cmp(&d[(i, b)])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            keep[(i, j)] = true;
            keep[(j, i)] = true; // union symmetrization
        }
    }
    let mut w = Array2::zeros((v, v));
    for i in 0..v {
        for j in 0..v {
            if keep[(i, j)] {
                w[(i, j)] = aff[(i, j)];
            }
        }
    }
    Ok(Graph::new(
        w,
        Metric::Knn,
        1.0,
        None,
        node_names.unwrap_or_else(|| default_names(v)),
    ))
}

/// Default k so that kNN sparsity tracks a density threshold.
pub fn knn_k_for_gdt(v: usize, gdt: f64) -> usize {
    ((gdt * (v - 1) as f64).round() as usize).max(1)
}

/// DTW affinity graph; same Gaussian conversion as the Euclidean graph.
pub fn build_dtw(
    series_train: ArrayView2<f64>,
    node_names: Option<Vec<String>>,
) -> Result<Graph, GraphError> {
    let v = series_train.nrows();
    if v < 2 {
        return Err(GraphError::TooFewVariables(v));
    }
    if series_train.ncols() < 2 {
        return Err(GraphError::TooShort(series_train.ncols()));
    }
    let rows: Vec<Vec<f64>> = (0..v).map(|i| series_train.row(i).to_vec()).collect();
    let mut d = Array2::zeros((v, v));
    for i in 0..v {
        for j in (i + 1)..v {
            let dist = dtw_distance(&rows[i], &rows[j]);
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    let w = distances_to_affinity(&d);
    Ok(Graph::new(
        w,
        Metric::Dtw,
        1.0,
        None,
        node_names.unwrap_or_else(|| default_names(v)),
    ))
}

/// Absolute Pearson correlation graph; errors on zero-variance variables.
pub fn build_correlation(
    series_train: ArrayView2<f64>,
    node_names: Option<Vec<String>>,
) -> Result<Graph, GraphError> {
    let v = series_train.nrows();
    if v < 2 {
        return Err(GraphError::TooFewVariables(v));
    }
    let names = node_names.unwrap_or_else(|| default_names(v));
    let t = series_train.ncols() as f64;
    let mut centered = series_train.to_owned();
    let mut stds = Array1::zeros(v);
    for (i, mut row) in centered.rows_mut().into_iter().enumerate() {
        let m = row.sum() / t;
        row.mapv_inplace(|x| x - m);
        let s = (row.iter().map(|x| x * x).sum::<f64>() / t).sqrt();
        if s == 0.0 {
            return Err(GraphError::ZeroVarianceVariable(names[i].clone()));
        }
        stds[i] = s;
    }
    let mut w = Array2::zeros((v, v));
    for i in 0..v {
        for j in (i + 1)..v {
            let cov = centered
                .row(i)
                .iter()
                .zip(centered.row(j).iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / t;
            let r = (cov / (stds[i] * stds[j])).abs().min(1.0);
            w[(i, j)] = r;
            w[(j, i)] = r;
        }
    }
    Ok(Graph::new(w, Metric::Corr, 1.0, None, names))
}

/// Uniformly sampled undirected edge set of exactly round(gdt·V(V-1)/2)
/// edges with Uniform(0,1] weights; deterministic under the seed.
pub fn build_random(v: usize, gdt: f64, seed: u64) -> Result<Graph, GraphError> {
    if v < 2 {
        return Err(GraphError::TooFewVariables(v));
    }
    if !(gdt > 0.0 && gdt <= 1.0) {
        return Err(GraphError::InvalidGdt(gdt));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..v)
        .flat_map(|i| ((i + 1)..v).map(move |j| (i, j)))
        .collect();
    let m = ((gdt * pairs.len() as f64).round() as usize).min(pairs.len());
    for k in 0..m {
        let pick = rng.gen_range(k..pairs.len());
        pairs.swap(k, pick);
    }
    let mut w = Array2::zeros((v, v));
    for &(i, j) in pairs.iter().take(m) {
        let weight = 1.0 - rng.gen::<f64>(); // (0, 1]
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    Ok(Graph::new(
        w,
        Metric::Rand,
        gdt,
        Some(seed),
        default_names(v),
    ))
}

/// Keep the top round(gdt·V(V-1)/2) undirected edges by weight, ties
/// broken by (i, j) lexicographic order; gdt = 1.0 is the identity.
pub fn sparsify(graph: &Graph, gdt: f64) -> Result<Graph, GraphError> {
    if !(gdt > 0.0 && gdt <= 1.0) {
        return Err(GraphError::InvalidGdt(gdt));
    }
    let v = graph.n_nodes();
    let mut out = graph.clone();
    out.gdt = gdt;
    if gdt >= 1.0 {
        return Ok(out);
    }
    let mut edges: Vec<(f64, usize, usize)> = (0..v)
        .flat_map(|i| ((i + 1)..v).map(move |j| (i, j)))
        .map(|(i, j)| {
            let w = graph.weights[(i, j)].max(graph.weights[(j, i)]);
            (w, i, j)
        })
        .collect();
    edges.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let keep = (gdt * edges.len() as f64).round() as usize;
    let mut w = Array2::zeros((v, v));
    for &(_, i, j) in edges.iter().take(keep) {
        w[(i, j)] = graph.weights[(i, j)];
        w[(j, i)] = graph.weights[(j, i)];
    }
    out.weights = w;
    Ok(out)
}

fn sym_normalize(w: &Array2<f64>) -> Array2<f64> {
    let v = w.nrows();
    let mut w_self = w.clone();
    for i in 0..v {
        w_self[(i, i)] += 1.0;
    }
    let deg: Vec<f64> = (0..v).map(|i| w_self.row(i).sum()).collect();
    let dinv: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    Array2::from_shape_fn((v, v), |(i, j)| dinv[i] * w_self[(i, j)] * dinv[j])
}

fn power_iteration_lambda_max(a: &Array2<f64>, iters: usize, tol: f64) -> f64 {
    let n = a.nrows();
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = a.dot(&x);
        let norm = y.dot(&y).sqrt();
        if norm < 1e-30 {
            return 0.0;
        }
        let next = norm;
        let xn = y / norm;
        if (next - lambda).abs() < tol {
            return next;
        }
        lambda = next;
        x = xn;
    }
    lambda
}

/// Â and (optionally) Chebyshev supports T_0..T_{K-1} of the scaled
/// symmetric-normalized Laplacian L̃ = 2L/λ_max − I.
pub fn normalize(graph: &Graph, chebyshev_order: Option<usize>) -> NormalizedGraph {
    let a_hat = sym_normalize(&graph.weights);
    let cheb_supports = chebyshev_order.map(|k| {
        let v = graph.n_nodes();
        // symmetric normalized Laplacian of the weighted graph
        let deg: Vec<f64> = (0..v).map(|i| graph.weights.row(i).sum()).collect();
        let dinv: Vec<f64> = deg
            .iter()
            .map(|d| if *d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let mut lap = Array2::from_shape_fn((v, v), |(i, j)| {
            let norm_w = dinv[i] * graph.weights[(i, j)] * dinv[j];
            if i == j {
                1.0 - norm_w
            } else {
                -norm_w
            }
        });
        let lambda_max = power_iteration_lambda_max(&lap, 100, 1e-8).max(1e-12);
        lap.mapv_inplace(|x| 2.0 * x / lambda_max);
        for i in 0..v {
            lap[(i, i)] -= 1.0;
        }
        let l_tilde = lap;
        let mut supports = Vec::with_capacity(k.max(1));
        supports.push(Array2::eye(v));
        if k >= 2 {
            supports.push(l_tilde.clone());
        }
        for i in 2..k {
            let next = 2.0 * l_tilde.dot(&supports[i - 1]) - &supports[i - 2];
            supports.push(next);
        }
        supports
    });
    NormalizedGraph {
        a_hat,
        cheb_supports,
    }
}

/// Pearson correlation of the flattened off-diagonal entries.
pub fn graph_correlation(g1: &Graph, g2: &Graph) -> Result<f64, GraphError> {
    let v = g1.n_nodes();
    if v != g2.n_nodes() {
        return Err(GraphError::SizeMismatch(v, g2.n_nodes()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..v {
        for j in 0..v {
            if i != j {
                a.push(g1.weights[(i, j)]);
                b.push(g2.weights[(i, j)]);
            }
        }
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
        cov += (x - ma) * (y - mb);
    }
    if va == 0.0 {
        return Err(GraphError::ConstantGraph("first"));
    }
    if vb == 0.0 {
        return Err(GraphError::ConstantGraph("second"));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn euclidean_identical_rows_weight_one() {
        let series = array![
            [1.0, 2.0, 3.0],
            [1.0, 2.0, 3.0],
            [5.0, -1.0, 0.0]
        ];
        let g = build_euclidean(series.view(), None).unwrap();
        assert_abs_diff_eq!(g.weights[(0, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(g.weights[(0, 0)], 0.0);
    }

    #[test]
    fn euclidean_three_four_five() {
        let series = array![[0.0, 0.0], [3.0, 4.0]];
        let d = pairwise_euclidean(series.view());
        assert_abs_diff_eq!(d[(0, 1)], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_affinity_symmetric_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let series = Array2::from_shape_fn((5, 30), |_| rng.gen_range(-2.0..2.0));
        let g = build_euclidean(series.view(), None).unwrap();
        for i in 0..5 {
            assert_eq!(g.weights[(i, i)], 0.0);
            for j in 0..5 {
                assert_abs_diff_eq!(g.weights[(i, j)], g.weights[(j, i)], epsilon = 1e-15);
                if i != j {
                    assert!(g.weights[(i, j)] > 0.0 && g.weights[(i, j)] <= 1.0);
                }
            }
        }
    }

    #[test]
    fn affinity_is_monotone_decreasing_in_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let series = Array2::from_shape_fn((6, 20), |_| rng.gen_range(-2.0..2.0));
        let d = pairwise_euclidean(series.view());
        let w = distances_to_affinity(&d);
        for i in 0..6 {
            for j in (i + 1)..6 {
                for k in 0..6 {
                    for l in (k + 1)..6 {
                        if d[(i, j)] < d[(k, l)] {
                            assert!(w[(i, j)] > w[(k, l)]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn knn_union_example() {
        // d(1,2)=1, d(1,3)=2, d(2,3)=3 via collinear points 0, 1, 3
        let series = array![[0.0, 0.0], [1.0, 1.0], [3.0, 3.0]];
        // distances: 1-2: sqrt(2), 1-3: sqrt(18), 2-3: sqrt(8) — order matches
        let g = build_knn(series.view(), 1, None).unwrap();
        // node 1 picks 2; node 2 picks 1; node 3 picks 2 -> union {1-2, 2-3}
        assert!(g.weights[(0, 1)] > 0.0);
        assert!(g.weights[(1, 2)] > 0.0);
        assert_eq!(g.weights[(0, 2)], 0.0);
    }

    #[test]
    fn knn_brute_force_oracle() {
        // exhaustive nearest-neighbor check on random instances
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = 6;
            let k = rng.gen_range(1..v);
            let series = Array2::from_shape_fn((v, 12), |_| rng.gen_range(-2.0..2.0));
            let d = pairwise_euclidean(series.view());
            let g = build_knn(series.view(), k, None).unwrap();
            let mut expect = Array2::from_elem((v, v), false);
            for i in 0..v {
                let mut order: Vec<usize> = (0..v).filter(|&j| j != i).collect();
                order.sort_by(|&a, &b| d[(i, a)].partial_cmp(&d[(i, b)]).unwrap());
                for &j in order.iter().take(k) {
                    expect[(i, j)] = true;
                    expect[(j, i)] = true;
                }
            }
            for i in 0..v {
                for j in 0..v {
                    assert_eq!(g.weights[(i, j)] > 0.0, expect[(i, j)] && i != j);
                }
            }
        }
    }

    #[test]
    fn knn_full_k_matches_euclidean_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let series = Array2::from_shape_fn((5, 15), |_| rng.gen_range(-2.0..2.0));
        let g = build_knn(series.view(), 4, None).unwrap();
        let e = build_euclidean(series.view(), None).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_abs_diff_eq!(g.weights[(i, j)], e.weights[(i, j)], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn knn_rejects_bad_k() {
        let series = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(build_knn(series.view(), 0, None).is_err());
        assert!(build_knn(series.view(), 2, None).is_err());
    }

    #[test]
    fn correlation_perfect_and_anticorrelated() {
        let series = array![
            [1.0, 2.0, 3.0],
            [2.0, 4.0, 6.0],
            [3.0, 2.0, 1.0]
        ];
        let g = build_correlation(series.view(), None).unwrap();
        assert_abs_diff_eq!(g.weights[(0, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.weights[(0, 2)], 1.0, epsilon = 1e-12); // |−1|
        assert_eq!(g.weights[(0, 0)], 0.0);
    }

    #[test]
    fn correlation_independent_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let series = Array2::from_shape_fn((2, 10_000), |_| rng.gen_range(-1.0..1.0));
        let g = build_correlation(series.view(), None).unwrap();
        assert!(g.weights[(0, 1)] < 0.05, "w = {}", g.weights[(0, 1)]);
    }

    #[test]
    fn correlation_zero_variance_names_variable() {
        let series = array![[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]];
        let err = build_correlation(series.view(), None).unwrap_err();
        assert!(err.to_string().contains("var_1"), "{err}");
    }

    #[test]
    fn random_graph_exact_edges_and_determinism() {
        let g = build_random(26, 0.2, 9).unwrap();
        assert_eq!(g.edge_count(), 65);
        let h = build_random(26, 0.2, 9).unwrap();
        assert_eq!(g.weights, h.weights);
        let full = build_random(26, 1.0, 9).unwrap();
        assert_eq!(full.edge_count(), 325);
    }

    #[test]
    fn sparsify_identity_at_full_density() {
        let g = build_random(10, 1.0, 1).unwrap();
        let s = sparsify(&g, 1.0).unwrap();
        assert_eq!(s.weights, g.weights);
    }

    #[test]
    fn sparsify_edge_counts() {
        let g = build_random(26, 1.0, 2).unwrap();
        for (gdt, expect) in [(0.2, 65), (0.4, 130)] {
            let s = sparsify(&g, gdt).unwrap();
            assert_eq!(s.edge_count(), expect);
        }
    }

    #[test]
    fn sparsify_keeps_top_weights() {
        let g = build_random(12, 1.0, 3).unwrap();
        let s = sparsify(&g, 0.3).unwrap();
        let mut kept_min = f64::INFINITY;
        let mut dropped_max: f64 = 0.0;
        for i in 0..12 {
            for j in (i + 1)..12 {
                let w = g.weights[(i, j)];
                if s.weights[(i, j)] > 0.0 {
                    kept_min = kept_min.min(w);
                } else {
                    dropped_max = dropped_max.max(w);
                }
            }
        }
        assert!(kept_min >= dropped_max);
    }

    #[test]
    fn normalize_hand_example() {
        // W = off-diagonal ones on 2 nodes: D = 2I, Â = 0.5·ones
        let w = array![[0.0, 1.0], [1.0, 0.0]];
        let g = Graph::new(w, Metric::Euc, 1.0, None, default_names(2));
        let n = normalize(&g, None);
        for x in n.a_hat.iter() {
            assert_abs_diff_eq!(*x, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_empty_graph_is_identity() {
        let g = Graph::new(Array2::zeros((3, 3)), Metric::Euc, 1.0, None, default_names(3));
        let n = normalize(&g, None);
        assert_abs_diff_eq!(n.a_hat, Array2::eye(3), epsilon = 1e-12);
    }

    #[test]
    fn chebyshev_recursion_holds() {
        let g = build_random(6, 0.5, 4).unwrap();
        let n = normalize(&g, Some(4));
        let sup = n.cheb_supports.unwrap();
        let l_tilde = &sup[1];
        for k in 2..4 {
            let expect = 2.0 * l_tilde.dot(&sup[k - 1]) - &sup[k - 2];
            assert_abs_diff_eq!(&sup[k], &expect, epsilon = 1e-10);
        }
        // T_2 = 2 L̃² − I
        let t2 = 2.0 * l_tilde.dot(l_tilde) - Array2::<f64>::eye(6);
        assert_abs_diff_eq!(&sup[2], &t2, epsilon = 1e-10);
    }

    #[test]
    fn normalized_adjacency_spectral_radius_at_most_one() {
        let g = build_random(10, 0.6, 5).unwrap();
        let n = normalize(&g, None);
        let rho = power_iteration_lambda_max(&n.a_hat, 200, 1e-12);
        assert!(rho <= 1.0 + 1e-9, "rho = {rho}");
    }

    #[test]
    fn graph_correlation_cases() {
        let g1 = build_random(8, 0.5, 6).unwrap();
        assert_abs_diff_eq!(graph_correlation(&g1, &g1).unwrap(), 1.0, epsilon = 1e-12);
        let mut g2 = g1.clone();
        g2.weights *= 3.0;
        assert_abs_diff_eq!(graph_correlation(&g1, &g2).unwrap(), 1.0, epsilon = 1e-12);
        let constant = Graph::new(Array2::zeros((8, 8)), Metric::Rand, 1.0, None, default_names(8));
        assert!(graph_correlation(&g1, &constant).is_err());
    }

    #[test]
    fn graph_correlation_reversed_ordering_is_negative() {
        // 3-node case where g2 reverses the weight ordering of g1
        let w1 = array![[0.0, 0.9, 0.5], [0.9, 0.0, 0.1], [0.5, 0.1, 0.0]];
        let w2 = array![[0.0, 0.1, 0.5], [0.1, 0.0, 0.9], [0.5, 0.9, 0.0]];
        let g1 = Graph::new(w1, Metric::Euc, 1.0, None, default_names(3));
        let g2 = Graph::new(w2, Metric::Euc, 1.0, None, default_names(3));
        assert!(graph_correlation(&g1, &g2).unwrap() < 0.0);
    }
}
