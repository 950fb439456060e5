//! Learned-graph transfer study: train the graph-learning forecaster
//! seeded from each static metric (and from a random graph), export the
//! adjacency it converged to, retrain the static-graph families on both
//! the original and the learned graph, and compare.

use super::{
    build_static_graph, pool, run_cell, windows_for, ExperimentError, ExperimentPlan,
};
use crate::data::{split_sequential, IndividualSeries};
use crate::graphs::{graph_correlation, Graph, Metric};
use crate::models::{Family, Forecaster, ModelConfig};
use crate::seed;
use crate::training::{train, TrainConfig};
use rayon::prelude::*;

/// Relative change of the learned-graph MSE against the static-graph
/// MSE, in percent; negative means the learned graph helped.
pub fn percent_change(mse_static: f64, mse_learned: f64) -> Result<f64, ExperimentError> {
    if mse_static <= 0.0 {
        return Err(ExperimentError::Train(
            crate::training::TrainError::EmptyData,
        ));
    }
    Ok(100.0 * (mse_learned - mse_static) / mse_static)
}

#[derive(Debug, Clone)]
pub struct TransferRecord {
    pub family: Family,
    pub metric: Metric,
    pub individual_id: String,
    pub outcome: Result<TransferOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub mse_static: f64,
    pub mse_learned: f64,
    pub percent_change: f64,
    /// off-diagonal Pearson correlation between the static and learned
    /// adjacency; absent when either graph is constant
    pub graph_correlation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BoxplotRecord {
    pub family: Family,
    pub metric: Metric,
    pub graph_kind: &'static str,
    pub individual_id: String,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct TransferReport {
    pub records: Vec<TransferRecord>,
    pub boxplot: Vec<BoxplotRecord>,
    /// (file stem, graph) pairs for the audit export: the static
    /// inputs and the learned adjacencies extracted from them
    pub graphs: Vec<(String, Graph)>,
}

const METRICS: [Metric; 5] = [
    Metric::Euc,
    Metric::Knn,
    Metric::Dtw,
    Metric::Corr,
    Metric::Rand,
];
const FAMILIES: [Family; 2] = [Family::RgcnAtt, Family::StAttCheb];

/// Experiment C at a fixed sequence length of 5 and the plan's density.
pub fn run_experiment_c(
    cohort: &[IndividualSeries],
    plan: &ExperimentPlan,
) -> Result<TransferReport, ExperimentError> {
    if cohort.is_empty() {
        return Err(ExperimentError::EmptyCohort);
    }
    let seq_len = 5;
    let exp_tag = seed::label("experiment_c");

    // one job per (metric, individual); the two downstream families
    // share the graph-learning run inside it
    let mut jobs = Vec::new();
    for (mi, &metric) in METRICS.iter().enumerate() {
        for (ii, _) in cohort.iter().enumerate() {
            jobs.push((mi, ii, metric));
        }
    }
    type JobOutput = (
        usize,
        usize,
        Result<(Vec<(Family, TransferOutcome)>, Graph, Graph), String>,
    );
    let outputs: Vec<JobOutput> = pool(plan.workers).install(|| {
        jobs.par_iter()
            .map(|&(mi, ii, metric)| {
                let series = &cohort[ii];
                let job_seed = seed::derive(plan.seed, &[exp_tag, mi as u64, ii as u64]);
                let result = run_transfer_job(series, metric, seq_len, plan, job_seed)
                    .map_err(|e| e.to_string());
                (mi, ii, result)
            })
            .collect()
    });

    let mut sorted = outputs;
    sorted.sort_by_key(|&(mi, ii, _)| (mi, ii));
    let mut records = Vec::new();
    let mut boxplot = Vec::new();
    let mut graphs = Vec::new();
    for (mi, ii, result) in sorted {
        let metric = METRICS[mi];
        let id = cohort[ii].id.clone();
        match result {
            Ok((outcomes, static_graph, learned_graph)) => {
                for (family, outcome) in outcomes {
                    boxplot.push(BoxplotRecord {
                        family,
                        metric,
                        graph_kind: "static",
                        individual_id: id.clone(),
                        mse: outcome.mse_static,
                    });
                    boxplot.push(BoxplotRecord {
                        family,
                        metric,
                        graph_kind: "learned",
                        individual_id: id.clone(),
                        mse: outcome.mse_learned,
                    });
                    records.push(TransferRecord {
                        family,
                        metric,
                        individual_id: id.clone(),
                        outcome: Ok(outcome),
                    });
                }
                graphs.push((format!("{id}_{metric}_static"), static_graph));
                graphs.push((format!("{id}_{metric}_learned"), learned_graph));
            }
            Err(msg) => {
                for family in FAMILIES {
                    records.push(TransferRecord {
                        family,
                        metric,
                        individual_id: id.clone(),
                        outcome: Err(msg.clone()),
                    });
                }
            }
        }
    }
    Ok(TransferReport {
        records,
        boxplot,
        graphs,
    })
}

/// Mean percent change across individuals with successful runs, per
/// (family, metric).
pub fn mean_percent_change(report: &TransferReport) -> Vec<(Family, Metric, f64, usize)> {
    let mut out = Vec::new();
    for family in FAMILIES {
        for metric in METRICS {
            let values: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.family == family && r.metric == metric)
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| o.percent_change))
                .collect();
            if !values.is_empty() {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                out.push((family, metric, mean, values.len()));
            }
        }
    }
    out
}

type JobResult = Result<(Vec<(Family, TransferOutcome)>, Graph, Graph), ExperimentError>;

fn run_transfer_job(
    series: &IndividualSeries,
    metric: Metric,
    seq_len: usize,
    plan: &ExperimentPlan,
    job_seed: u64,
) -> JobResult {
    let (train_seg, _) = split_sequential(series, 0.7)?;
    let static_graph = build_static_graph(
        metric,
        train_seg.view(),
        &series.variable_names,
        plan.gdt,
        seed::derive(job_seed, &[seed::label("rand_graph")]),
    )?;

    // stage 1: graph learning, embeddings seeded from the static graph
    let (train_w, _) = windows_for(series, seq_len)?;
    let mut gl_cfg = ModelConfig::new(Family::GraphLearn, series.n_vars(), seq_len);
    gl_cfg.hidden = plan.hidden;
    let mut gl = Forecaster::new(
        &gl_cfg,
        Some(&static_graph),
        seed::derive(job_seed, &[seed::label("gl_init")]),
    )?;
    let tc = TrainConfig {
        epochs: plan.epochs,
        lr: plan.lr,
        clip_norm: plan.clip_norm,
        seed: seed::derive(job_seed, &[seed::label("gl_train")]),
    };
    train(&mut gl, &train_w, &tc)?;
    let learned_graph = gl
        .extract_learned_graph(series.variable_names.clone())
        .expect("graph-learning family");
    let correlation = graph_correlation(&static_graph, &learned_graph).ok();

    // stage 2: static-graph families on the original vs learned graph
    let mut outcomes = Vec::new();
    for (fi, family) in FAMILIES.into_iter().enumerate() {
        let fam_seed = seed::derive(job_seed, &[seed::label("family"), fi as u64]);
        let tc_static = TrainConfig {
            epochs: plan.epochs,
            lr: plan.lr,
            clip_norm: plan.clip_norm,
            seed: seed::derive(fam_seed, &[seed::label("train_static")]),
        };
        let mse_static = run_cell(
            series,
            family,
            Some(&static_graph),
            seq_len,
            plan.hidden,
            &tc_static,
            seed::derive(fam_seed, &[seed::label("init_static")]),
        )?;
        let tc_learned = TrainConfig {
            epochs: plan.epochs,
            lr: plan.lr,
            clip_norm: plan.clip_norm,
            seed: seed::derive(fam_seed, &[seed::label("train_learned")]),
        };
        let mse_learned = run_cell(
            series,
            family,
            Some(&learned_graph),
            seq_len,
            plan.hidden,
            &tc_learned,
            seed::derive(fam_seed, &[seed::label("init_learned")]),
        )?;
        outcomes.push((
            family,
            TransferOutcome {
                mse_static,
                mse_learned,
                percent_change: percent_change(mse_static, mse_learned)?,
                graph_correlation: correlation,
            },
        ));
    }
    Ok((outcomes, static_graph, learned_graph))
}
