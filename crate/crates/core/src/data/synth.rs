//! Planted-graph synthetic cohort generator. Each individual gets a random
//! symmetric adjacency, a stable VAR(1) coefficient matrix supported on it,
//! and a simulated series x_t = tanh(A x_{t-1}) + noise mapped onto the
//! 1-7 Likert scale with optional missingness.

use super::{DataError, IndividualSeries, RawCohort, RawIndividual};
use crate::graphs::{Graph, Metric};
use crate::seed;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_individuals: usize,
    pub n_vars: usize,
    pub n_timepoints: usize,
    /// fraction of possible undirected edges in the planted graph
    pub density: f64,
    /// spectral radius the coefficient matrix is rescaled to (< 1)
    pub spectral_radius_cap: f64,
    pub noise_std: f64,
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_individuals: 20,
            n_vars: 26,
            n_timepoints: 140,
            density: 0.2,
            spectral_radius_cap: 0.9,
            noise_std: 0.15,
            missing_rate: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(DataError::InvalidSpec(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        if !(self.spectral_radius_cap > 0.0 && self.spectral_radius_cap < 1.0) {
            return Err(DataError::InvalidSpec(format!(
                "spectral radius cap {} outside (0, 1)",
                self.spectral_radius_cap
            )));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(DataError::InvalidSpec(format!(
                "missing rate {} outside [0, 1)",
                self.missing_rate
            )));
        }
        if self.n_vars < 2 || self.n_timepoints < 10 || self.n_individuals == 0 {
            return Err(DataError::InvalidSpec(
                "need >= 2 variables, >= 10 timepoints, >= 1 individual".into(),
            ));
        }
        Ok(())
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn spectral_radius(a: &Array2<f64>, iters: usize) -> f64 {
    let n = a.nrows();
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = a.dot(&x);
        let norm = y.dot(&y).sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        lambda = norm;
        x = y / norm;
    }
    lambda
}

/// Exact undirected edge count for a density on V nodes.
pub fn edge_count(v: usize, density: f64) -> usize {
    let pairs = v * (v - 1) / 2;
    (density * pairs as f64).round() as usize
}

/// Sample a symmetric signed coefficient matrix supported on `edges`
/// undirected edges, rescaled to the given spectral radius.
fn planted_coefficients(
    v: usize,
    edges: usize,
    radius: f64,
    rng: &mut impl Rng,
) -> (Array2<f64>, Array2<f64>) {
    let mut pairs: Vec<(usize, usize)> = (0..v)
        .flat_map(|i| ((i + 1)..v).map(move |j| (i, j)))
        .collect();
    // partial Fisher-Yates for an exact uniform edge sample
    for k in 0..edges.min(pairs.len()) {
        let pick = rng.gen_range(k..pairs.len());
        pairs.swap(k, pick);
    }
    let mut coef = Array2::zeros((v, v));
    for &(i, j) in pairs.iter().take(edges) {
        let w: f64 = rng.gen_range(0.3..1.0);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        coef[(i, j)] = sign * w;
        coef[(j, i)] = sign * w;
    }
    // Split the radius budget: positive diagonal self-persistence in
    // [0.6, 0.72]*radius, cross coupling rescaled to the remaining
    // 0.28*radius. For a symmetric matrix the eigenvalues then stay
    // within max(diag) + rho(off-diag) <= radius.
    let diag_hi = 0.72 * radius;
    let rho = spectral_radius(&coef, 100);
    if rho > 0.0 {
        coef *= 0.28 * radius / rho;
    }
    let planted = coef.mapv(f64::abs);
    for i in 0..v {
        coef[(i, i)] = rng.gen_range(0.6 * radius..diag_hi);
    }
    (coef, planted)
}

/// Simulate x_t = tanh(A x_{t-1}) + noise for T points after a burn-in.
pub fn simulate_var(
    coef: &Array2<f64>,
    t: usize,
    noise_std: f64,
    burn_in: usize,
    rng: &mut impl Rng,
) -> Array2<f64> {
    let v = coef.nrows();
    let mut x = Array1::from_shape_fn(v, |_| normal(rng));
    let mut out = Array2::zeros((v, t));
    for step in 0..burn_in + t {
        let mut next = coef.dot(&x).mapv(f64::tanh);
        if noise_std > 0.0 {
            for e in next.iter_mut() {
                *e += noise_std * normal(rng);
            }
        }
        x = next;
        if step >= burn_in {
            out.column_mut(step - burn_in).assign(&x);
        }
    }
    out
}

fn to_likert(series: &Array2<f64>) -> Array2<f64> {
    let mut out = series.clone();
    for mut row in out.rows_mut() {
        let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-12 {
            row.fill(4.0);
        } else {
            row.mapv_inplace(|x| (1.0 + 6.0 * (x - lo) / (hi - lo)).round().clamp(1.0, 7.0));
        }
    }
    out
}

/// Generate a cohort of normalized series plus the planted graphs the
/// dynamics were built on. Deterministic under the spec seed.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(Vec<IndividualSeries>, Vec<Graph>), DataError> {
    spec.validate()?;
    let v = spec.n_vars;
    let edges = edge_count(v, spec.density);
    let variable_names: Vec<String> = (1..=v).map(|i| format!("var_{i}")).collect();
    let mut cohort = Vec::with_capacity(spec.n_individuals);
    let mut graphs = Vec::with_capacity(spec.n_individuals);
    for i in 0..spec.n_individuals {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[i as u64]));
        let (coef, planted) = planted_coefficients(v, edges, spec.spectral_radius_cap, &mut rng);
        let sim = simulate_var(&coef, spec.n_timepoints, spec.noise_std, 50, &mut rng);
        let likert = to_likert(&sim);
        let ratings = Array2::from_shape_fn(likert.dim(), |(r, c)| {
            if spec.missing_rate > 0.0 && rng.gen::<f64>() < spec.missing_rate {
                None
            } else {
                Some(likert[(r, c)])
            }
        });
        let id = format!("ind_{:03}", i + 1);
        let ind = RawIndividual {
            id: id.clone(),
            ratings,
        };
        let full = super::impute(&ind, &variable_names)?;
        let series = super::normalize_individual(&id, &full, &variable_names)?;
        cohort.push(series);
        graphs.push(Graph::new(
            planted,
            Metric::Planted,
            spec.density,
            Some(spec.seed),
            variable_names.clone(),
        ));
    }
    Ok((cohort, graphs))
}

/// Raw (Likert, with missingness) version of the generator, for exercising
/// the ingestion pipeline end to end.
pub fn generate_synthetic_raw(spec: &SyntheticSpec) -> Result<RawCohort, DataError> {
    spec.validate()?;
    let v = spec.n_vars;
    let edges = edge_count(v, spec.density);
    let variable_names: Vec<String> = (1..=v).map(|i| format!("var_{i}")).collect();
    let mut individuals = Vec::with_capacity(spec.n_individuals);
    for i in 0..spec.n_individuals {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[i as u64]));
        let (coef, _) = planted_coefficients(v, edges, spec.spectral_radius_cap, &mut rng);
        let sim = simulate_var(&coef, spec.n_timepoints, spec.noise_std, 50, &mut rng);
        let likert = to_likert(&sim);
        let ratings = Array2::from_shape_fn(likert.dim(), |(r, c)| {
            if spec.missing_rate > 0.0 && rng.gen::<f64>() < spec.missing_rate {
                None
            } else {
                Some(likert[(r, c)])
            }
        });
        individuals.push(RawIndividual {
            id: format!("ind_{:03}", i + 1),
            ratings,
        });
    }
    Ok(RawCohort {
        variable_names,
        individuals,
    })
}
