use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stabgap::analysis::{AnalysisSettings, EquivalenceVerdict, GapCurve};

use crate::config::{ExperimentConfig, OutputFormat};

/// Bumped whenever a field of [`ReportDocument`] or [`GapDocument`] changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

/// One plot-ready table. Empty cells (`None`) mark rungs without an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn new(file: &str, columns: &[&str], rows: Vec<Vec<Option<f64>>>) -> Self {
        Table {
            file: file.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub fingerprint: String,
    pub size: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub cloud: Option<CloudSummary>,
    pub settings: Option<AnalysisSettings>,
    pub verdict: Option<EquivalenceVerdict>,
    /// Set when the pipeline could not run; `verdict` is then absent.
    pub error: Option<String>,
    pub tables: Vec<Table>,
}

impl ReportDocument {
    pub fn has_violation(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.has_violation())
    }

    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.has_violation() {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub cloud: CloudSummary,
    pub gap: GapCurve,
    pub tables: Vec<Table>,
}

pub(crate) fn gap_table(gap: &GapCurve) -> Table {
    Table::new(
        "gap_curve.csv",
        &["rho", "L2estimate"],
        gap.rungs
            .iter()
            .map(|r| vec![Some(r.rho), r.estimate])
            .collect(),
    )
}

pub(crate) fn tables_for(v: &EquivalenceVerdict) -> Vec<Table> {
    let mut tables = vec![gap_table(&v.gap)];
    if let Some(c) = &v.convergence {
        tables.push(Table::new(
            "convergence.csv",
            &["dt", "sup_error"],
            c.rungs
                .iter()
                .map(|r| vec![Some(r.dt), Some(r.error)])
                .collect(),
        ));
    }
    if let Some(c) = &v.consistency {
        tables.push(Table::new(
            "consistency.csv",
            &["dt", "defect"],
            c.rungs
                .iter()
                .map(|r| vec![Some(r.dt), Some(r.defect)])
                .collect(),
        ));
    }
    tables
}

/// Seventeen significant digits, `.` as the decimal separator, no locale.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(dir: &Path, table: &Table) -> Result<PathBuf, EmitError> {
    let path = dir.join(&table.file);
    let csv_err = |source| EmitError::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.map(format_number).unwrap_or_default()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|source| EmitError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, file: &str, doc: &T) -> Result<PathBuf, EmitError> {
    let path = dir.join(file);
    fs::write(&path, to_json(doc)?).map_err(|source| EmitError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), EmitError> {
    fs::create_dir_all(dir).map_err(|source| EmitError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `report.json`, or one CSV file per table. Returns the paths written.
pub fn emit(
    report: &ReportDocument,
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, EmitError> {
    ensure_dir(dir)?;
    match format {
        OutputFormat::Json => Ok(vec![write_json(dir, "report.json", report)?]),
        OutputFormat::CsvBundle => report.tables.iter().map(|t| write_table(dir, t)).collect(),
    }
}

/// Writes `gap.json`, or `gap_curve.csv`.
pub fn emit_gap(
    doc: &GapDocument,
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, EmitError> {
    ensure_dir(dir)?;
    match format {
        OutputFormat::Json => Ok(vec![write_json(dir, "gap.json", doc)?]),
        OutputFormat::CsvBundle => doc.tables.iter().map(|t| write_table(dir, t)).collect(),
    }
}

/// Pretty-printed JSON with a trailing newline, as written to disk.
pub fn to_json<T: Serialize>(doc: &T) -> Result<String, EmitError> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }
}
