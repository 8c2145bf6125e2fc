//! Result tables: CSV, JSON and markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::run::ExperimentResult;
use crate::error::{LrvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            _ => Err(LrvError::Config(format!("unknown table format '{s}' (csv, json, markdown)"))),
        }
    }
}

impl TableFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => TableFormat::Json,
            Some("md") => TableFormat::Markdown,
            _ => TableFormat::Csv,
        }
    }
}

fn io(e: impl std::fmt::Display) -> LrvError {
    LrvError::Io(e.to_string())
}

/// Renders results in the requested format.
pub fn emit_table(results: &[ExperimentResult], format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in results {
                w.serialize(r).map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(io)?).map_err(io)
        }
        TableFormat::Json => serde_json::to_string_pretty(results).map_err(io),
        TableFormat::Markdown => Ok(markdown(results)),
    }
}

/// Estimators as rows, `(model, T, delta)` as columns.
fn markdown(results: &[ExperimentResult]) -> String {
    let mut columns: Vec<(String, usize, u64, f64)> = Vec::new();
    let mut rows: Vec<String> = Vec::new();
    let mut cells = BTreeMap::new();
    for r in results {
        let col = (r.model.name().to_string(), r.t, r.delta.to_bits(), r.delta);
        if !columns.iter().any(|c| c.0 == col.0 && c.1 == col.1 && c.2 == col.2) {
            columns.push(col);
        }
        if !rows.contains(&r.estimator) {
            rows.push(r.estimator.clone());
        }
        cells.insert((r.estimator.clone(), r.model.name().to_string(), r.t, r.delta.to_bits()), r.rejection_rate);
    }
    let mut out = String::from("| estimator |");
    for (m, t, _, d) in &columns {
        let _ = write!(out, " {m} T={t} δ={d} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "| {row} |");
        for (m, t, bits, _) in &columns {
            match cells.get(&(row.clone(), m.clone(), *t, *bits)) {
                Some(v) => {
                    let _ = write!(out, " {v:.3} |");
                }
                None => out.push_str("  |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes results to `path` in the given format.
pub fn write_table(results: &[ExperimentResult], path: &Path, format: TableFormat) -> Result<()> {
    std::fs::write(path, emit_table(results, format)?)?;
    Ok(())
}

/// Parses results from CSV text.
pub fn parse_csv(text: &str) -> Result<Vec<ExperimentResult>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| LrvError::Config(e.to_string()))).collect()
}

/// Reads results from a CSV or JSON file.
pub fn read_results(path: &Path) -> Result<Vec<ExperimentResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| LrvError::Io(format!("{}: {e}", path.display())))?;
    match TableFormat::from_path(path) {
        TableFormat::Json => serde_json::from_str(&text).map_err(|e| LrvError::Config(e.to_string())),
        TableFormat::Csv => parse_csv(&text),
        TableFormat::Markdown => Err(LrvError::Config("markdown tables cannot be read back".into())),
    }
}
