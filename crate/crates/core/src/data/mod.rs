//! EMA dataset model and preprocessing: compliance and variance filtering,
//! imputation, per-individual z-score normalization, sequential splitting,
//! windowing into supervised 1-lag samples, and a planted-graph synthetic
//! cohort generator standing in for the private study data.

mod io;
mod synth;

pub use io::{load_cohort, load_raw_cohort, save_cohort, CohortSidecar, IndividualMeta};
pub use synth::{generate_synthetic, generate_synthetic_raw, SyntheticSpec};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("compliance filter removed every individual (min_fraction {0})")]
    EmptyCohort(f64),
    #[error("invalid compliance fraction {0}: must be in (0, 1]")]
    InvalidFraction(f64),
    #[error("variance filter removed every variable (min_std {0})")]
    AllVariablesDropped(f64),
    #[error("variable {0} has zero variance; filter before normalizing")]
    ZeroVariance(String),
    #[error("variable {0} has fewer than 2 observed values")]
    TooSparse(String),
    #[error("series too short: T={t}, need at least {min}")]
    TooShort { t: usize, min: usize },
    #[error("window length {l} must be smaller than segment length {t}")]
    WindowTooLong { l: usize, t: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("rating {value} out of Likert range 1-7 at line {line}")]
    RatingOutOfRange { value: f64, line: usize },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Raw Likert-scale recordings for one individual: V×T with missing cells.
#[derive(Debug, Clone)]
pub struct RawIndividual {
    pub id: String,
    /// ratings[(v, t)]: Some(1..=7) or missing
    pub ratings: Array2<Option<f64>>,
}

impl RawIndividual {
    pub fn n_vars(&self) -> usize {
        self.ratings.nrows()
    }

    pub fn n_timepoints(&self) -> usize {
        self.ratings.ncols()
    }

    /// Fraction of prompts with at least one answered variable.
    pub fn compliance(&self) -> f64 {
        let t = self.n_timepoints();
        if t == 0 {
            return 0.0;
        }
        let answered = (0..t)
            .filter(|&j| self.ratings.column(j).iter().any(|c| c.is_some()))
            .count();
        answered as f64 / t as f64
    }
}

/// A cohort of raw individuals sharing one variable list.
#[derive(Debug, Clone)]
pub struct RawCohort {
    pub variable_names: Vec<String>,
    pub individuals: Vec<RawIndividual>,
}

/// One participant's fully preprocessed V×T series. Values are z-scored
/// per variable; the raw-scale mean/std are kept for inverse transforms.
#[derive(Debug, Clone)]
pub struct IndividualSeries {
    pub id: String,
    /// V×T, normalized
    pub values: Array2<f64>,
    pub variable_names: Vec<String>,
    /// per-variable (mean, std) on the raw scale
    pub norm_stats: Vec<(f64, f64)>,
}

impl IndividualSeries {
    pub fn n_vars(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_timepoints(&self) -> usize {
        self.values.ncols()
    }

    /// Map normalized values back to the raw scale.
    pub fn inverse_transform(&self) -> Array2<f64> {
        let mut out = self.values.clone();
        for (v, mut row) in out.rows_mut().into_iter().enumerate() {
            let (m, s) = self.norm_stats[v];
            row.mapv_inplace(|x| x * s + m);
        }
        out
    }
}

/// Supervised 1-lag samples: each input is the L×V window ending at t-1,
/// each target the V-vector at t.
#[derive(Debug, Clone)]
pub struct WindowedSamples {
    pub inputs: Vec<Array2<f64>>,
    pub targets: Vec<Array1<f64>>,
    pub seq_len: usize,
}

impl WindowedSamples {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Drop individuals whose answered-prompt fraction is below `min_fraction`.
pub fn filter_compliance(cohort: &RawCohort, min_fraction: f64) -> Result<RawCohort, DataError> {
    if !(min_fraction > 0.0 && min_fraction <= 1.0) {
        return Err(DataError::InvalidFraction(min_fraction));
    }
    let kept: Vec<RawIndividual> = cohort
        .individuals
        .iter()
        .filter(|ind| ind.compliance() >= min_fraction)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(DataError::EmptyCohort(min_fraction));
    }
    Ok(RawCohort {
        variable_names: cohort.variable_names.clone(),
        individuals: kept,
    })
}

fn observed_std(cells: &[f64]) -> f64 {
    let n = cells.len() as f64;
    if cells.is_empty() {
        return 0.0;
    }
    let mean = cells.iter().sum::<f64>() / n;
    (cells.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Drop variables whose raw-scale std is below `min_std` for any
/// individual, then keep the intersection so all individuals share one
/// variable subset.
pub fn filter_low_variance(cohort: &RawCohort, min_std: f64) -> Result<RawCohort, DataError> {
    let v = cohort.variable_names.len();
    let mut keep = vec![true; v];
    for ind in &cohort.individuals {
        for vi in 0..v {
            let observed: Vec<f64> = ind.ratings.row(vi).iter().flatten().cloned().collect();
            if observed_std(&observed) < min_std {
                keep[vi] = false;
            }
        }
    }
    if keep.iter().all(|k| !k) {
        return Err(DataError::AllVariablesDropped(min_std));
    }
    let names: Vec<String> = cohort
        .variable_names
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(n, _)| n.clone())
        .collect();
    let individuals = cohort
        .individuals
        .iter()
        .map(|ind| {
            let rows: Vec<usize> = (0..v).filter(|&i| keep[i]).collect();
            let t = ind.n_timepoints();
            let ratings =
                Array2::from_shape_fn((rows.len(), t), |(r, c)| ind.ratings[(rows[r], c)]);
            RawIndividual {
                id: ind.id.clone(),
                ratings,
            }
        })
        .collect();
    Ok(RawCohort {
        variable_names: names,
        individuals,
    })
}

/// Fill gaps: interior by linear interpolation, edges by nearest observed
/// value. Errors if a variable has fewer than 2 observations.
pub fn impute(ind: &RawIndividual, variable_names: &[String]) -> Result<Array2<f64>, DataError> {
    let (v, t) = (ind.n_vars(), ind.n_timepoints());
    let mut out = Array2::zeros((v, t));
    for vi in 0..v {
        let row = ind.ratings.row(vi);
        let observed: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|x| (j, x)))
            .collect();
        if observed.len() < 2 {
            return Err(DataError::TooSparse(variable_names[vi].clone()));
        }
        let (first_j, first_x) = observed[0];
        let (last_j, last_x) = *observed.last().unwrap();
        for j in 0..t {
            out[(vi, j)] = if j <= first_j {
                first_x
            } else if j >= last_j {
                last_x
            } else if let Some(x) = row[j] {
                x
            } else {
                // interior gap: interpolate between the surrounding observations
                let (j0, x0) = *observed.iter().rev().find(|(k, _)| *k < j).unwrap();
                let (j1, x1) = *observed.iter().find(|(k, _)| *k > j).unwrap();
                x0 + (x1 - x0) * ((j - j0) as f64) / ((j1 - j0) as f64)
            };
        }
    }
    Ok(out)
}

/// Per-variable z-score with population std; errors on zero variance.
pub fn normalize_individual(
    id: &str,
    values: &Array2<f64>,
    variable_names: &[String],
) -> Result<IndividualSeries, DataError> {
    let mut out = values.clone();
    let mut stats = Vec::with_capacity(values.nrows());
    for (vi, mut row) in out.rows_mut().into_iter().enumerate() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let std = (row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        if std == 0.0 {
            return Err(DataError::ZeroVariance(variable_names[vi].clone()));
        }
        row.mapv_inplace(|x| (x - mean) / std);
        stats.push((mean, std));
    }
    Ok(IndividualSeries {
        id: id.to_string(),
        values: out,
        variable_names: variable_names.to_vec(),
        norm_stats: stats,
    })
}

/// Full raw-to-normalized pipeline for one cohort, with default filters.
pub fn preprocess(
    cohort: &RawCohort,
    min_compliance: f64,
    min_std: f64,
) -> Result<Vec<IndividualSeries>, DataError> {
    let cohort = filter_compliance(cohort, min_compliance)?;
    let cohort = filter_low_variance(&cohort, min_std)?;
    cohort
        .individuals
        .iter()
        .map(|ind| {
            let full = impute(ind, &cohort.variable_names)?;
            normalize_individual(&ind.id, &full, &cohort.variable_names)
        })
        .collect()
}

/// First floor(train_fraction·T) points train, remainder test; no shuffle.
pub fn split_sequential(
    series: &IndividualSeries,
    train_fraction: f64,
) -> Result<(Array2<f64>, Array2<f64>), DataError> {
    let t = series.n_timepoints();
    if t < 10 {
        return Err(DataError::TooShort { t, min: 10 });
    }
    let cut = (train_fraction * t as f64).floor() as usize;
    let train = series.values.slice_axis(Axis(1), (0..cut).into()).to_owned();
    let test = series.values.slice_axis(Axis(1), (cut..t).into()).to_owned();
    Ok((train, test))
}

/// Sliding windows of length L with stride 1 over a V×T segment.
/// Sample count is T - L; the window [t-L, t-1] predicts t.
pub fn make_windows(segment: ArrayView2<f64>, l: usize) -> Result<WindowedSamples, DataError> {
    let t = segment.ncols();
    if l == 0 || l >= t {
        return Err(DataError::WindowTooLong { l, t });
    }
    let v = segment.nrows();
    let mut inputs = Vec::with_capacity(t - l);
    let mut targets = Vec::with_capacity(t - l);
    for start in 0..t - l {
        // L×V: rows are time steps
        let win = Array2::from_shape_fn((l, v), |(i, j)| segment[(j, start + i)]);
        let tgt = Array1::from_shape_fn(v, |j| segment[(j, start + l)]);
        inputs.push(win);
        targets.push(tgt);
    }
    Ok(WindowedSamples {
        inputs,
        targets,
        seq_len: l,
    })
}

/// Test windows borrow the trailing L training points so every test
/// target is scored: count equals the test-segment length.
pub fn make_test_windows<'a>(
    train: ArrayView2<'a, f64>,
    test: ArrayView2<'a, f64>,
    l: usize,
) -> Result<WindowedSamples, DataError> {
    let (v, t_train, t_test) = (train.nrows(), train.ncols(), test.ncols());
    if l == 0 || l > t_train {
        return Err(DataError::WindowTooLong { l, t: t_train });
    }
    let tail = train
        .slice_axis(Axis(1), (t_train - l..t_train).into())
        .to_owned();
    let test_owned = test.to_owned();
    let joint = ndarray::concatenate(Axis(1), &[tail.view(), test_owned.view()])
        .expect("concat train tail with test");
    let mut samples = make_windows(joint.view(), l)?;
    debug_assert_eq!(samples.len(), t_test);
    samples.seq_len = l;
    let _ = v;
    Ok(samples)
}

/// Long-format record set used by the CSV loader before matrix assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub individual_id: String,
    pub timepoint: usize,
    pub ratings: Vec<Option<f64>>,
}

pub(crate) fn cohort_from_records(
    variable_names: Vec<String>,
    records: Vec<RawRecord>,
) -> RawCohort {
    let mut by_id: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        by_id.entry(r.individual_id.clone()).or_default().push(r);
    }
    let individuals = by_id
        .into_iter()
        .map(|(id, mut recs)| {
            recs.sort_by_key(|r| r.timepoint);
            let t = recs.len();
            let v = variable_names.len();
            let mut ratings = Array2::from_elem((v, t), None);
            for (j, rec) in recs.iter().enumerate() {
                for (vi, cell) in rec.ratings.iter().enumerate() {
                    ratings[(vi, j)] = *cell;
                }
            }
            RawIndividual { id, ratings }
        })
        .collect();
    RawCohort {
        variable_names,
        individuals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn raw(id: &str, rows: Vec<Vec<Option<f64>>>) -> RawIndividual {
        let v = rows.len();
        let t = rows[0].len();
        let ratings = Array2::from_shape_fn((v, t), |(i, j)| rows[i][j]);
        RawIndividual {
            id: id.to_string(),
            ratings,
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("var_{i}")).collect()
    }

    #[test]
    fn compliance_retains_full_responder() {
        let cohort = RawCohort {
            variable_names: names(1),
            individuals: vec![raw("a", vec![vec![Some(3.0); 224]])],
        };
        let out = filter_compliance(&cohort, 0.5).unwrap();
        assert_eq!(out.individuals.len(), 1);
    }

    #[test]
    fn compliance_removes_silent_individual_and_signals_empty() {
        let cohort = RawCohort {
            variable_names: names(1),
            individuals: vec![raw("a", vec![vec![None; 10]])],
        };
        assert!(matches!(
            filter_compliance(&cohort, 0.5),
            Err(DataError::EmptyCohort(_))
        ));
    }

    #[test]
    fn compliance_threshold_splits_cohort() {
        // 60% vs 40% answered prompts at min 0.5
        let mut r60 = vec![Some(4.0); 6];
        r60.extend(vec![None; 4]);
        let mut r40 = vec![Some(4.0); 4];
        r40.extend(vec![None; 6]);
        let cohort = RawCohort {
            variable_names: names(1),
            individuals: vec![raw("hi", vec![r60]), raw("lo", vec![r40])],
        };
        let out = filter_compliance(&cohort, 0.5).unwrap();
        assert_eq!(out.individuals.len(), 1);
        assert_eq!(out.individuals[0].id, "hi");
    }

    #[test]
    fn variance_filter_drops_constant_keeps_varying() {
        let cohort = RawCohort {
            variable_names: names(2),
            individuals: vec![raw(
                "a",
                vec![
                    vec![Some(4.0); 8],                                     // constant
                    vec![1.0, 7.0, 1.0, 7.0, 1.0, 7.0, 1.0, 7.0].into_iter().map(Some).collect(), // std 3
                ],
            )],
        };
        let out = filter_low_variance(&cohort, 0.1).unwrap();
        assert_eq!(out.variable_names, vec!["var_1".to_string()]);
    }

    #[test]
    fn variance_filter_thresholds_correctly() {
        // stds ~0.05 and ~0.5: one variable survives min_std 0.1
        let lo: Vec<Option<f64>> = (0..100)
            .map(|i| Some(4.0 + 0.05 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let hi: Vec<Option<f64>> = (0..100)
            .map(|i| Some(4.0 + 0.5 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let cohort = RawCohort {
            variable_names: names(2),
            individuals: vec![raw("a", vec![lo, hi])],
        };
        let out = filter_low_variance(&cohort, 0.1).unwrap();
        assert_eq!(out.variable_names.len(), 1);
        assert_eq!(out.variable_names[0], "var_1");
    }

    #[test]
    fn variance_filter_can_empty_out() {
        let cohort = RawCohort {
            variable_names: names(1),
            individuals: vec![raw("a", vec![vec![Some(4.0); 8]])],
        };
        assert!(matches!(
            filter_low_variance(&cohort, 0.1),
            Err(DataError::AllVariablesDropped(_))
        ));
    }

    #[test]
    fn normalize_zero_std_errors() {
        let vals = array![[4.0, 4.0, 4.0]];
        assert!(matches!(
            normalize_individual("a", &vals, &names(1)),
            Err(DataError::ZeroVariance(_))
        ));
    }

    #[test]
    fn normalize_two_point_example() {
        // [1, 7] under population std (=3) maps to [-1, +1]
        let vals = array![[1.0, 7.0]];
        let s = normalize_individual("a", &vals, &names(1)).unwrap();
        assert_abs_diff_eq!(s.values[(0, 0)], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[(0, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_round_trips() {
        let vals = array![[1.0, 3.0, 5.0, 7.0], [2.0, 2.0, 6.0, 4.0]];
        let s = normalize_individual("a", &vals, &names(2)).unwrap();
        let back = s.inverse_transform();
        assert_abs_diff_eq!(back, vals, epsilon = 1e-9);
        // normalized rows are mean 0, std 1
        for row in s.values.rows() {
            let m = row.sum() / row.len() as f64;
            assert_abs_diff_eq!(m, 0.0, epsilon = 1e-9);
            let sd = (row.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / row.len() as f64).sqrt();
            assert_abs_diff_eq!(sd, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn impute_interpolates_interior_gap() {
        let ind = raw("a", vec![vec![Some(1.0), None, Some(3.0)]]);
        let out = impute(&ind, &names(1)).unwrap();
        assert_abs_diff_eq!(out[(0, 1)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn impute_no_gaps_unchanged() {
        let ind = raw("a", vec![vec![Some(1.0), Some(5.0), Some(3.0)]]);
        let out = impute(&ind, &names(1)).unwrap();
        assert_eq!(out, array![[1.0, 5.0, 3.0]]);
    }

    #[test]
    fn impute_leading_gap_nearest_fill() {
        let ind = raw("a", vec![vec![None, Some(5.0), Some(5.0)]]);
        let out = impute(&ind, &names(1)).unwrap();
        assert_eq!(out, array![[5.0, 5.0, 5.0]]);
    }

    #[test]
    fn impute_all_missing_errors() {
        let ind = raw("a", vec![vec![None, None, Some(1.0)]]);
        assert!(matches!(
            impute(&ind, &names(1)),
            Err(DataError::TooSparse(_))
        ));
    }

    fn series_of_len(t: usize) -> IndividualSeries {
        let vals = Array2::from_shape_fn((2, t), |(v, j)| (v * t + j) as f64);
        IndividualSeries {
            id: "a".into(),
            values: vals,
            variable_names: names(2),
            norm_stats: vec![(0.0, 1.0); 2],
        }
    }

    #[test]
    fn split_140_gives_98_42() {
        let s = series_of_len(140);
        let (tr, te) = split_sequential(&s, 0.7).unwrap();
        assert_eq!(tr.ncols(), 98);
        assert_eq!(te.ncols(), 42);
    }

    #[test]
    fn split_10_gives_7_3_and_partitions() {
        let s = series_of_len(10);
        let (tr, te) = split_sequential(&s, 0.7).unwrap();
        assert_eq!((tr.ncols(), te.ncols()), (7, 3));
        let joined = ndarray::concatenate(Axis(1), &[tr.view(), te.view()]).unwrap();
        assert_eq!(joined, s.values);
    }

    #[test]
    fn split_too_short_errors() {
        let s = series_of_len(9);
        assert!(split_sequential(&s, 0.7).is_err());
    }

    #[test]
    fn windows_count_law() {
        let s = series_of_len(10);
        for l in [1usize, 2, 5] {
            let w = make_windows(s.values.view(), l).unwrap();
            assert_eq!(w.len(), 10 - l);
        }
    }

    #[test]
    fn windows_l1_are_one_lag_pairs() {
        let s = series_of_len(6);
        let w = make_windows(s.values.view(), 1).unwrap();
        for (i, (inp, tgt)) in w.inputs.iter().zip(&w.targets).enumerate() {
            for v in 0..2 {
                assert_eq!(inp[(0, v)], s.values[(v, i)]);
                assert_eq!(tgt[v], s.values[(v, i + 1)]);
            }
        }
    }

    #[test]
    fn windows_reject_long_l() {
        let s = series_of_len(5);
        assert!(make_windows(s.values.view(), 5).is_err());
    }

    #[test]
    fn test_windows_score_every_target() {
        let s = series_of_len(20);
        let (tr, te) = split_sequential(&s, 0.7).unwrap();
        for l in [1usize, 2, 5] {
            let w = make_test_windows(tr.view(), te.view(), l).unwrap();
            assert_eq!(w.len(), te.ncols());
            // first target is the first test point
            for v in 0..2 {
                assert_eq!(w.targets[0][v], te[(v, 0)]);
            }
        }
    }
}
