//! Cohort-level experiment orchestration: the model/metric comparison
//! grid (A), the sparsity sweep (B), and the learned-graph transfer
//! study (C), each emitting a fixed-shape CSV table. Cells are
//! independent training jobs scheduled across a bounded worker pool;
//! per-cell failures are recorded and excluded from aggregates without
//! aborting the run.

mod report;
mod transfer;

pub use report::{export_graphs, write_boxplot_csv, write_grid_csv, write_transfer_csv};
pub use transfer::{
    mean_percent_change, percent_change, run_experiment_c, BoxplotRecord, TransferOutcome,
    TransferRecord, TransferReport,
};

use crate::data::{make_test_windows, make_windows, split_sequential, DataError, IndividualSeries, WindowedSamples};
use crate::graphs::{
    build_correlation, build_dtw, build_euclidean, build_knn, build_random, knn_k_for_gdt,
    sparsify, Graph, GraphError, Metric,
};
use crate::models::{Family, Forecaster, ModelConfig, ModelError};
use crate::seed;
use crate::training::{evaluate, train, TrainConfig, TrainError};
use ndarray::ArrayView2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Data(#[from] DataError),
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Train(#[from] TrainError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty cohort")]
    EmptyCohort,
}

/// Axes and hyperparameters shared by all three experiments. Defaults
/// reproduce the reference protocol; tests and quick runs shrink epochs
/// and hidden width.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub clip_norm: Option<f64>,
    /// sparsity used by experiments A and C
    pub gdt: f64,
    /// sequence lengths swept by experiment A
    pub seq_lens: Vec<usize>,
    /// densities swept by experiment B
    pub gdts: Vec<f64>,
    /// seeds averaged into each RAND cell
    pub n_random_repeats: usize,
    pub workers: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 300,
            lr: 0.01,
            hidden: 32,
            clip_norm: Some(5.0),
            gdt: 0.2,
            seq_lens: vec![1, 2, 5],
            gdts: vec![0.2, 0.4, 1.0],
            n_random_repeats: 5,
            workers: 1,
        }
    }
}

/// Aggregate of one grid cell across individuals.
#[derive(Debug, Clone)]
pub struct CellStat {
    pub mean: f64,
    pub std: f64,
    /// individuals contributing to the mean
    pub n: usize,
    /// individuals excluded because their training job failed
    pub excluded: usize,
}

impl CellStat {
    fn from_values(values: &[f64], excluded: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n: 0,
                excluded,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        Self {
            mean,
            std: var.sqrt(),
            n,
            excluded,
        }
    }

    /// Table cell text: `mean(std)`, with an exclusion marker when some
    /// individuals failed, or `FAILED` when all did.
    pub fn render(&self) -> String {
        if self.n == 0 {
            return "FAILED".to_string();
        }
        let base = format!("{:.4}({:.4})", self.mean, self.std);
        if self.excluded > 0 {
            format!("{base} excl={}", self.excluded)
        } else {
            base
        }
    }
}

/// A row-labelled, column-labelled grid of aggregated MSE cells.
#[derive(Debug, Clone)]
pub struct GridReport {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// row-major, shape row_labels.len() × col_labels.len()
    pub cells: Vec<Vec<CellStat>>,
    /// per-individual test MSE behind each cell, same shape
    pub records: Vec<Vec<Vec<IndividualRecord>>>,
}

#[derive(Debug, Clone)]
pub struct IndividualRecord {
    pub individual_id: String,
    pub outcome: Result<f64, String>,
}

/// Train/test windows for one individual at one sequence length.
pub fn windows_for(
    series: &IndividualSeries,
    l: usize,
) -> Result<(WindowedSamples, WindowedSamples), DataError> {
    let (train_seg, test_seg) = split_sequential(series, 0.7)?;
    let train_w = make_windows(train_seg.view(), l)?;
    let test_w = make_test_windows(train_seg.view(), test_seg.view(), l)?;
    Ok((train_w, test_w))
}

/// Build one static graph family from a training segment, sparsified to
/// exactly the target density.
pub fn build_static_graph(
    metric: Metric,
    train_segment: ArrayView2<f64>,
    node_names: &[String],
    gdt: f64,
    rand_seed: u64,
) -> Result<Graph, GraphError> {
    let names = Some(node_names.to_vec());
    let v = train_segment.nrows();
    let dense = match metric {
        Metric::Euc => build_euclidean(train_segment, names)?,
        Metric::Knn => build_knn(train_segment, knn_k_for_gdt(v, gdt), names)?,
        Metric::Dtw => build_dtw(train_segment, names)?,
        Metric::Corr => build_correlation(train_segment, names)?,
        Metric::Rand => {
            let mut g = build_random(v, gdt, rand_seed)?;
            g.node_names = node_names.to_vec();
            return Ok(g);
        }
        other => panic!("{other} is not a constructible static metric"),
    };
    sparsify(&dense, gdt)
}

/// One training job: build the model, train on the individual's train
/// windows, score on the test windows.
pub(crate) fn run_cell(
    series: &IndividualSeries,
    family: Family,
    graph: Option<&Graph>,
    seq_len: usize,
    hidden: usize,
    train_cfg: &TrainConfig,
    init_seed: u64,
) -> Result<f64, ExperimentError> {
    let (train_w, test_w) = windows_for(series, seq_len)?;
    let mut cfg = ModelConfig::new(family, series.n_vars(), seq_len);
    cfg.hidden = hidden;
    let mut model = Forecaster::new(&cfg, graph, init_seed)?;
    train(&mut model, &train_w, train_cfg)?;
    Ok(evaluate(&model, &test_w)?)
}

pub(crate) fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("build worker pool")
}

/// Row labels for the model-comparison grid: the LSTM baseline plus
/// every GNN family crossed with every static metric.
fn grid_rows_a() -> Vec<(Family, Option<Metric>)> {
    let mut rows = vec![(Family::Lstm, None)];
    for family in [Family::RgcnAtt, Family::StAttCheb, Family::GraphLearn] {
        for metric in [Metric::Euc, Metric::Knn, Metric::Dtw, Metric::Corr] {
            rows.push((family, Some(metric)));
        }
    }
    rows
}

fn row_label(family: Family, metric: Option<Metric>) -> String {
    match metric {
        Some(m) => format!("{family}_{m}"),
        None => family.to_string(),
    }
}

/// Experiment A: every model family (with each static graph metric at
/// the plan's density) across the plan's sequence lengths.
pub fn run_experiment_a(
    cohort: &[IndividualSeries],
    plan: &ExperimentPlan,
) -> Result<GridReport, ExperimentError> {
    if cohort.is_empty() {
        return Err(ExperimentError::EmptyCohort);
    }
    let rows = grid_rows_a();
    let row_labels: Vec<String> = rows.iter().map(|&(f, m)| row_label(f, m)).collect();
    let col_labels: Vec<String> = plan.seq_lens.iter().map(|l| format!("seq_{l}")).collect();
    let exp_tag = seed::label("experiment_a");

    // flatten (row, col, individual) into independent jobs
    let mut jobs = Vec::new();
    for (ri, &(family, metric)) in rows.iter().enumerate() {
        for (ci, &l) in plan.seq_lens.iter().enumerate() {
            for ii in 0..cohort.len() {
                jobs.push((ri, ci, ii, family, metric, l));
            }
        }
    }
    let outcomes: Vec<(usize, usize, usize, Result<f64, String>)> = pool(plan.workers).install(|| {
        jobs.par_iter()
            .map(|&(ri, ci, ii, family, metric, l)| {
                let series = &cohort[ii];
                let cell_seed =
                    seed::derive(plan.seed, &[exp_tag, ri as u64, ci as u64, ii as u64]);
                let outcome = (|| -> Result<f64, ExperimentError> {
                    let graph = match metric {
                        Some(m) => {
                            let (train_seg, _) = split_sequential(series, 0.7)?;
                            Some(build_static_graph(
                                m,
                                train_seg.view(),
                                &series.variable_names,
                                plan.gdt,
                                seed::derive(cell_seed, &[seed::label("rand_graph")]),
                            )?)
                        }
                        None => None,
                    };
                    let tc = TrainConfig {
                        epochs: plan.epochs,
                        lr: plan.lr,
                        clip_norm: plan.clip_norm,
                        seed: seed::derive(cell_seed, &[seed::label("train")]),
                    };
                    run_cell(
                        series,
                        family,
                        graph.as_ref(),
                        l,
                        plan.hidden,
                        &tc,
                        seed::derive(cell_seed, &[seed::label("init")]),
                    )
                })();
                (ri, ci, ii, outcome.map_err(|e| e.to_string()))
            })
            .collect()
    });

    Ok(assemble_grid(
        row_labels,
        col_labels,
        cohort,
        outcomes,
    ))
}

/// Experiment B: the three GNN families with each static metric plus a
/// random null, swept over graph densities at a fixed sequence length
/// of 5. Random cells average over `n_random_repeats` graph seeds.
pub fn run_experiment_b(
    cohort: &[IndividualSeries],
    plan: &ExperimentPlan,
) -> Result<GridReport, ExperimentError> {
    if cohort.is_empty() {
        return Err(ExperimentError::EmptyCohort);
    }
    let seq_len = 5;
    let mut rows = Vec::new();
    for family in [Family::RgcnAtt, Family::StAttCheb, Family::GraphLearn] {
        for metric in [
            Metric::Euc,
            Metric::Knn,
            Metric::Dtw,
            Metric::Corr,
            Metric::Rand,
        ] {
            rows.push((family, metric));
        }
    }
    let row_labels: Vec<String> = rows.iter().map(|&(f, m)| row_label(f, Some(m))).collect();
    let col_labels: Vec<String> = plan.gdts.iter().map(|g| format!("gdt_{g}")).collect();
    let exp_tag = seed::label("experiment_b");

    let mut jobs = Vec::new();
    for (ri, &(family, metric)) in rows.iter().enumerate() {
        for (ci, &gdt) in plan.gdts.iter().enumerate() {
            for (ii, _) in cohort.iter().enumerate() {
                jobs.push((ri, ci, ii, family, metric, gdt));
            }
        }
    }
    let outcomes: Vec<(usize, usize, usize, Result<f64, String>)> = pool(plan.workers).install(|| {
        jobs.par_iter()
            .map(|&(ri, ci, ii, family, metric, gdt)| {
                let series = &cohort[ii];
                let cell_seed =
                    seed::derive(plan.seed, &[exp_tag, ri as u64, ci as u64, ii as u64]);
                let repeats = if metric == Metric::Rand {
                    plan.n_random_repeats
                } else {
                    1
                };
                let outcome = (|| -> Result<f64, ExperimentError> {
                    let (train_seg, _) = split_sequential(series, 0.7)?;
                    let mut total = 0.0;
                    for rep in 0..repeats {
                        let rep_seed = seed::derive(cell_seed, &[rep as u64]);
                        let graph = build_static_graph(
                            metric,
                            train_seg.view(),
                            &series.variable_names,
                            gdt,
                            seed::derive(rep_seed, &[seed::label("rand_graph")]),
                        )?;
                        let tc = TrainConfig {
                            epochs: plan.epochs,
                            lr: plan.lr,
                            clip_norm: plan.clip_norm,
                            seed: seed::derive(rep_seed, &[seed::label("train")]),
                        };
                        total += run_cell(
                            series,
                            family,
                            Some(&graph),
                            seq_len,
                            plan.hidden,
                            &tc,
                            seed::derive(rep_seed, &[seed::label("init")]),
                        )?;
                    }
                    Ok(total / repeats as f64)
                })();
                (ri, ci, ii, outcome.map_err(|e| e.to_string()))
            })
            .collect()
    });

    Ok(assemble_grid(
        row_labels,
        col_labels,
        cohort,
        outcomes,
    ))
}

fn assemble_grid(
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    cohort: &[IndividualSeries],
    outcomes: Vec<(usize, usize, usize, Result<f64, String>)>,
) -> GridReport {
    let (nr, nc, ni) = (row_labels.len(), col_labels.len(), cohort.len());
    let mut records: Vec<Vec<Vec<IndividualRecord>>> =
        vec![vec![Vec::with_capacity(ni); nc]; nr];
    let mut sorted = outcomes;
    sorted.sort_by_key(|&(ri, ci, ii, _)| (ri, ci, ii));
    for (ri, ci, ii, outcome) in sorted {
        records[ri][ci].push(IndividualRecord {
            individual_id: cohort[ii].id.clone(),
            outcome,
        });
    }
    let cells = records
        .iter()
        .map(|row| {
            row.iter()
                .map(|recs| {
                    let ok: Vec<f64> =
                        recs.iter().filter_map(|r| r.outcome.clone().ok()).collect();
                    CellStat::from_values(&ok, recs.len() - ok.len())
                })
                .collect()
        })
        .collect();
    GridReport {
        row_labels,
        col_labels,
        cells,
        records,
    }
}
