//! CSV serialization of experiment results. Floating-point fields use
//! shortest round-trip formatting so identical runs produce byte-identical
//! files.

use super::transfer::mean_percent_change;
use super::{ExperimentError, GridReport, TransferReport};
use crate::graphs::save_graph;
use std::path::Path;

/// Table-shaped report: one row per model/metric combination, one column
/// per swept value, cells as `mean(std)`.
pub fn write_grid_csv(report: &GridReport, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model".to_string()];
    header.extend(report.col_labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in report.row_labels.iter().zip(&report.cells) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(|c| c.render()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format transfer results: one row per (family, metric, individual)
/// plus a trailing MEAN row per (family, metric).
pub fn write_transfer_csv(report: &TransferReport, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "family",
        "metric",
        "individual_id",
        "mse_static",
        "mse_learned",
        "percent_change",
        "graph_correlation",
        "status",
    ])?;
    for r in &report.records {
        match &r.outcome {
            Ok(o) => w.write_record([
                r.family.to_string(),
                r.metric.to_string(),
                r.individual_id.clone(),
                o.mse_static.to_string(),
                o.mse_learned.to_string(),
                o.percent_change.to_string(),
                o.graph_correlation
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
                "ok".to_string(),
            ])?,
            Err(msg) => w.write_record([
                r.family.to_string(),
                r.metric.to_string(),
                r.individual_id.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {msg}"),
            ])?,
        }
    }
    for (family, metric, mean, n) in mean_percent_change(report) {
        w.write_record([
            family.to_string(),
            metric.to_string(),
            "MEAN".to_string(),
            String::new(),
            String::new(),
            mean.to_string(),
            String::new(),
            format!("n={n}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Boxplot-ready long format: one MSE value per row.
pub fn write_boxplot_csv(report: &TransferReport, path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["family", "metric", "graph_kind", "individual_id", "mse"])?;
    for b in &report.boxplot {
        w.write_record([
            b.family.to_string(),
            b.metric.to_string(),
            b.graph_kind.to_string(),
            b.individual_id.clone(),
            b.mse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Audit export of every graph the transfer study touched, one adjacency
/// CSV (plus sidecar) per file stem.
pub fn export_graphs(report: &TransferReport, dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    for (stem, graph) in &report.graphs {
        save_graph(graph, &dir.join(format!("{stem}.csv")))?;
    }
    Ok(())
}
