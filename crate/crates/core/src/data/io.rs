//! Cohort file formats: long CSV (`individual_id,t,<vars…>`, empty cells
//! for missing values) plus a JSON sidecar carrying normalization stats
//! and provenance so that load∘save is the identity on values.

use super::{cohort_from_records, DataError, IndividualSeries, RawCohort, RawRecord};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndividualMeta {
    /// per-variable (mean, std) on the raw scale
    pub norm_stats: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSidecar {
    pub variable_names: Vec<String>,
    pub individuals: BTreeMap<String, IndividualMeta>,
    pub generator_seed: Option<u64>,
    pub provenance: String,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write normalized series to CSV plus the JSON sidecar.
pub fn save_cohort(
    cohort: &[IndividualSeries],
    csv_path: &Path,
    generator_seed: Option<u64>,
    provenance: &str,
) -> Result<(), DataError> {
    let variable_names = cohort
        .first()
        .map(|s| s.variable_names.clone())
        .unwrap_or_default();
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["individual_id".to_string(), "t".to_string()];
    header.extend(variable_names.iter().cloned());
    w.write_record(&header).map_err(csv_to_io)?;
    for s in cohort {
        for t in 0..s.n_timepoints() {
            let mut rec = vec![s.id.clone(), t.to_string()];
            for v in 0..s.n_vars() {
                rec.push(s.values[(v, t)].to_string());
            }
            w.write_record(&rec).map_err(csv_to_io)?;
        }
    }
    w.flush()?;
    let sidecar = CohortSidecar {
        variable_names,
        individuals: cohort
            .iter()
            .map(|s| {
                (
                    s.id.clone(),
                    IndividualMeta {
                        norm_stats: s.norm_stats.clone(),
                    },
                )
            })
            .collect(),
        generator_seed,
        provenance: provenance.to_string(),
    };
    std::fs::write(
        sidecar_path(csv_path),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

fn csv_to_io(e: csv::Error) -> DataError {
    DataError::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}

fn parse_header(headers: &csv::StringRecord) -> Result<Vec<String>, DataError> {
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "individual_id" || cols[1] != "t" {
        let missing = if cols.first() != Some(&"individual_id") {
            "individual_id"
        } else if cols.get(1) != Some(&"t") {
            "t"
        } else {
            "variable columns"
        };
        return Err(DataError::Parse {
            line: 1,
            msg: format!("missing column: {missing}"),
        });
    }
    Ok(cols[2..].iter().map(|s| s.to_string()).collect())
}

fn read_records(
    csv_path: &Path,
    validate_likert: bool,
) -> Result<(Vec<String>, Vec<RawRecord>), DataError> {
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_to_io)?;
    let variable_names = parse_header(r.headers().map_err(csv_to_io)?)?;
    let mut records = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2; // 1-based, after header
        let rec = rec.map_err(|e| DataError::Parse {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != variable_names.len() + 2 {
            return Err(DataError::Parse {
                line,
                msg: format!(
                    "expected {} fields, got {}",
                    variable_names.len() + 2,
                    rec.len()
                ),
            });
        }
        let individual_id = rec[0].to_string();
        let timepoint: usize = rec[1].parse().map_err(|_| DataError::Parse {
            line,
            msg: format!("bad timepoint '{}'", &rec[1]),
        })?;
        let mut ratings = Vec::with_capacity(variable_names.len());
        for cell in rec.iter().skip(2) {
            if cell.is_empty() {
                ratings.push(None);
            } else {
                let x: f64 = cell.parse().map_err(|_| DataError::Parse {
                    line,
                    msg: format!("bad value '{cell}'"),
                })?;
                if validate_likert && !(1.0..=7.0).contains(&x) {
                    return Err(DataError::RatingOutOfRange { value: x, line });
                }
                ratings.push(Some(x));
            }
        }
        records.push(RawRecord {
            individual_id,
            timepoint,
            ratings,
        });
    }
    Ok((variable_names, records))
}

/// Load a raw Likert cohort, validating the 1-7 range.
pub fn load_raw_cohort(csv_path: &Path) -> Result<RawCohort, DataError> {
    let (variable_names, records) = read_records(csv_path, true)?;
    Ok(cohort_from_records(variable_names, records))
}

/// Load a normalized cohort written by [`save_cohort`]; requires the
/// JSON sidecar next to the CSV.
pub fn load_cohort(csv_path: &Path) -> Result<Vec<IndividualSeries>, DataError> {
    let (variable_names, records) = read_records(csv_path, false)?;
    let sidecar: CohortSidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(csv_path))?)?;
    let raw = cohort_from_records(variable_names.clone(), records);
    let mut out = Vec::new();
    for ind in raw.individuals {
        let (v, t) = (ind.n_vars(), ind.n_timepoints());
        let mut values = Array2::zeros((v, t));
        for vi in 0..v {
            for ti in 0..t {
                values[(vi, ti)] = ind.ratings[(vi, ti)].ok_or_else(|| DataError::Parse {
                    line: 0,
                    msg: format!("missing cell in normalized cohort for {}", ind.id),
                })?;
            }
        }
        let meta = sidecar
            .individuals
            .get(&ind.id)
            .ok_or_else(|| DataError::Parse {
                line: 0,
                msg: format!("sidecar has no entry for individual {}", ind.id),
            })?;
        out.push(IndividualSeries {
            id: ind.id,
            values,
            variable_names: variable_names.clone(),
            norm_stats: meta.norm_stats.clone(),
        });
    }
    Ok(out)
}
