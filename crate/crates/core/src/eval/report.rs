//! Tabular evaluation reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    InDomain,
    OutOfDomain,
}

/// One CSV row. `value` is empty for an OOV row without OOV tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub representation: String,
    pub training_size: usize,
    pub metric: String,
    pub value: Option<f64>,
    pub domain: Domain,
    pub oov_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub oov_rows: Vec<ReportRow>,
}

/// `results.csv` becomes `results.oov.csv`.
pub fn oov_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
    let name = match ext {
        Some(e) => format!("{stem}.oov.{e}"),
        None => format!("{stem}.oov"),
    };
    path.with_file_name(name)
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["method", "representation", "training_size", "metric", "value", "domain", "oov_count"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

impl EvalReport {
    pub fn extend(&mut self, rows: Vec<ReportRow>, oov_rows: Vec<ReportRow>) {
        self.rows.extend(rows);
        self.oov_rows.extend(oov_rows);
    }

    /// Writes the main table to `path` and the OOV table next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        write_rows(fs::File::create(path)?, &self.rows)?;
        let oov = oov_path(path);
        write_rows(fs::File::create(&oov)?, &self.oov_rows)?;
        Ok(oov)
    }
}
