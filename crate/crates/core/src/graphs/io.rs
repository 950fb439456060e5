//! Graph CSV export/import: V×V matrix with a header of node names plus a
//! JSON metadata sidecar. Values go through the shortest round-trip
//! decimal form, so import is bit-exact.

use super::{Graph, GraphError, Metric};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub metric: Metric,
    pub gdt: f64,
    pub seed: Option<u64>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_graph(graph: &Graph, csv_path: &Path) -> Result<(), GraphError> {
    let mut w = csv::Writer::from_path(csv_path)
        .map_err(|e| GraphError::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    w.write_record(&graph.node_names)
        .map_err(|e| GraphError::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    for row in graph.weights.rows() {
        let rec: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        w.write_record(&rec)
            .map_err(|e| GraphError::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    }
    w.flush()?;
    let sidecar = GraphSidecar {
        metric: graph.metric,
        gdt: graph.gdt,
        seed: graph.seed,
    };
    std::fs::write(
        sidecar_path(csv_path),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

pub fn load_graph(csv_path: &Path) -> Result<Graph, GraphError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)
        .map_err(|e| GraphError::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    let node_names: Vec<String> = r
        .headers()
        .map_err(|e| GraphError::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let v = node_names.len();
    let mut weights = Array2::zeros((v, v));
    let mut row_idx = 0usize;
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| GraphError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != v {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected {v} fields, got {}", rec.len()),
            });
        }
        if row_idx >= v {
            return Err(GraphError::Parse {
                line,
                msg: format!("more than {v} rows"),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            weights[(row_idx, j)] = cell.parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad weight '{cell}'"),
            })?;
        }
        row_idx += 1;
    }
    if row_idx != v {
        return Err(GraphError::Parse {
            line: row_idx + 1,
            msg: format!("expected {v} rows, got {row_idx}"),
        });
    }
    let sidecar: GraphSidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(csv_path))?)?;
    Ok(Graph {
        weights,
        metric: sidecar.metric,
        gdt: sidecar.gdt,
        seed: sidecar.seed,
        node_names,
    })
}
