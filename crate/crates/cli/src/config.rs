//! TOML configuration with `key=value` overrides.

use std::path::Path;

use serde::Deserialize;
use toml::{Table, Value};
use zerofilter_core::experiments::ExperimentConfig;

use crate::CliError;

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

fn parse_error(path: &Path, text: &str, err: toml::de::Error) -> CliError {
    let (line, column) = err.span().map_or((0, 0), |span| line_col(text, span.start));
    CliError::Parse {
        path: path.display().to_string(),
        line,
        column,
        message: err.message().to_string(),
    }
}

/// Reads a TOML value from override text; bare words become strings.
fn override_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| {
        CliError::Validation(format!(
            "override {assignment:?} is not of the form key=value"
        ))
    })?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!(
            "override key {key:?} is empty"
        )));
    }
    let (last, parents) = path.split_last().expect("non-empty");
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Validation(format!("override key {key:?}: {p} is not a table"))
            })?;
    }
    node.insert(last.to_string(), override_value(value.trim()));
    Ok(())
}

/// Loads `path` (if any), applies `overrides` in order, fills defaults and
/// validates every invariant.
pub fn parse_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::MissingFile(path.display().to_string()),
                _ => CliError::Io {
                    path: path.display().to_string(),
                    source: e,
                },
            })?;
            // Typed parse first, so unknown keys and type errors carry a position.
            toml::from_str::<ExperimentConfig>(&text).map_err(|e| parse_error(path, &text, e))?;
            toml::from_str::<Table>(&text).map_err(|e| parse_error(path, &text, e))?
        }
        None => Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg = ExperimentConfig::deserialize(Value::Table(table))
        .map_err(|e| CliError::Validation(format!("override: {}", e.message())))?;
    cfg.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}
