//! Bit-stable CSV and JSON output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use zerofilter_core::experiments::{ExperimentConfig, ExperimentResult, Table, Value, Verdict};

use crate::CliError;

/// Shortest round-trip representation in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:e}")
}

fn cell(v: &Value) -> String {
    match v {
        Value::Float(x) => format_float(*x),
        Value::Int(i) => i.to_string(),
        Value::Text(s) => s.clone(),
        Value::Empty => String::new(),
    }
}

/// The CSV text of a table: header row, then rows in table order.
pub fn table_csv(table: &Table) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Validation(format!("csv encoding: {e}"));
    w.write_record(&table.columns).map_err(to_err)?;
    for row in &table.rows {
        let mut record = vec![row.case_id.clone()];
        record.extend(row.values.iter().map(cell));
        w.write_record(&record).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Validation(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    verdict: &'a str,
    rows: usize,
    criteria: &'a [Verdict],
    failed: Vec<&'a str>,
    constants: &'a std::collections::BTreeMap<String, f64>,
    notes: &'a [String],
    fingerprint: &'a zerofilter_core::experiments::Fingerprint,
    config: &'a ExperimentConfig,
}

/// JSON summary of a result; depends only on the result and config.
pub fn summary_json(result: &ExperimentResult, cfg: &ExperimentConfig) -> String {
    let summary = Summary {
        experiment: result.name,
        verdict: result.overall(),
        rows: result.table.rows.len(),
        criteria: &result.verdicts,
        failed: result.failed_criteria(),
        constants: &result.constants,
        notes: &result.notes,
        fingerprint: &result.fingerprint,
        config: cfg,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("serializable summary");
    text.push('\n');
    text
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes `<name>.csv` and `<name>.summary.json` into `dir`.
pub fn emit_results(
    result: &ExperimentResult,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = dir.join(format!("{}.csv", result.name));
    let json_path = dir.join(format!("{}.summary.json", result.name));
    write_file(&csv_path, &table_csv(&result.table)?)?;
    write_file(&json_path, &summary_json(result, cfg))?;
    Ok(vec![csv_path, json_path])
}
