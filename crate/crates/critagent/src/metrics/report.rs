//! CSV reporting: one row per criterion with its lexical and judged metrics,
//! plus aggregate rows per (dataset, method). Rows are written in a fixed
//! sort order so repeated runs produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CRITERION_HEADER: [&str; 11] = [
    "run_id",
    "dataset",
    "method",
    "instruction_id",
    "criterion_index",
    "S",
    "I",
    "initial_pass",
    "edited_pass",
    "delta",
    "excluded_flag",
];

pub const AGGREGATE_HEADER: [&str; 10] =
    ["dataset", "method", "#", "S", "I", "Initial", "Edited", "Delta", "A", "Recall"];

/// One criterion's metrics. Judged columns stay empty unless the
/// actionability loop ran; `excluded_flag` marks criteria the judge could
/// not produce verdicts for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub run_id: String,
    pub dataset: String,
    pub method: String,
    pub instruction_id: String,
    pub criterion_index: usize,
    #[serde(rename = "S")]
    pub specificity: Option<f64>,
    #[serde(rename = "I")]
    pub implicitness: Option<f64>,
    pub initial_pass: Option<bool>,
    pub edited_pass: Option<bool>,
    pub delta: Option<i8>,
    pub excluded_flag: bool,
}

/// Aggregates for one (dataset, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: String,
    #[serde(rename = "#")]
    pub criteria_count: usize,
    #[serde(rename = "S")]
    pub specificity: Option<f64>,
    #[serde(rename = "I")]
    pub implicitness: Option<f64>,
    #[serde(rename = "Initial")]
    pub initial_pass_rate: Option<f64>,
    #[serde(rename = "Edited")]
    pub edited_pass_rate: Option<f64>,
    #[serde(rename = "Delta")]
    pub delta: Option<f64>,
    #[serde(rename = "A")]
    pub actionability: Option<f64>,
    #[serde(rename = "Recall")]
    pub recall: Option<f64>,
}

fn csv_err(err: csv::Error) -> Error {
    Error::InvalidData { kind: "csv", reason: err.to_string() }
}

/// Writes criterion rows sorted by (dataset, method, instruction, index).
/// An empty slice still produces the header line.
pub fn write_criterion_rows(path: &Path, mut rows: Vec<CriterionRow>) -> Result<()> {
    rows.sort_by(|a, b| {
        (&a.dataset, &a.method, &a.instruction_id, a.criterion_index).cmp(&(
            &b.dataset,
            &b.method,
            &b.instruction_id,
            b.criterion_index,
        ))
    });
    let mut writer =
        csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    writer.write_record(CRITERION_HEADER).map_err(csv_err)?;
    for row in &rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_criterion_rows(path: &Path) -> Result<Vec<CriterionRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CRITERION_HEADER) {
        return Err(Error::InvalidData {
            kind: "csv",
            reason: format!(
                "unexpected header {:?} in {}",
                header.iter().collect::<Vec<_>>(),
                path.display()
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(csv_err)?);
    }
    Ok(rows)
}

/// Writes aggregate rows sorted by (dataset, method); header-only when empty.
pub fn write_aggregate_rows(path: &Path, mut rows: Vec<AggregateRow>) -> Result<()> {
    rows.sort_by(|a, b| (&a.dataset, &a.method).cmp(&(&b.dataset, &b.method)));
    let mut writer =
        csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    writer.write_record(AGGREGATE_HEADER).map_err(csv_err)?;
    for row in &rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// Mean of the present values; None when there are none.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
