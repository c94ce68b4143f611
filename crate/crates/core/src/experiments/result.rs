use std::collections::BTreeMap;

use serde::Serialize;

use super::config::{ExperimentConfig, Tolerances};

/// One cell of a result table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Value {
    fn from(v: f64) -> Value {
        Value::Float(v)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Value {
        Value::Int(v.into())
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Value {
        Value::Int(v as i64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Value {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Value {
        Value::Text(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Value {
        v.map_or(Value::Empty, Value::Float)
    }
}

/// A table row; the first column is always `case_id`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub case_id: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    /// Column names, `case_id` first.
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Table {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, case_id: impl Into<String>, values: Vec<Value>) {
        debug_assert_eq!(values.len() + 1, self.columns.len());
        self.rows.push(Row {
            case_id: case_id.into(),
            values,
        });
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    }

    /// Value of `column` in the row `case_id`.
    pub fn get(&self, case_id: &str, column: &str) -> Option<&Value> {
        let col = self.columns.iter().position(|c| *c == column)?;
        let row = self.rows.iter().find(|r| r.case_id == case_id)?;
        row.values.get(col.checked_sub(1)?)
    }

    /// Float entries of `column`, in row order.
    pub fn floats(&self, column: &str) -> Vec<f64> {
        let Some(col) = self.columns.iter().position(|c| *c == column) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match r.values.get(col.wrapping_sub(1)) {
                Some(Value::Float(v)) => Some(*v),
                _ => None,
            })
            .collect()
    }
}

/// Outcome of one named criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    /// Advisory verdicts are reported but never fail a run.
    pub advisory: bool,
    pub detail: String,
}

/// Inputs that identify a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub revision: String,
    pub n_points: usize,
    pub half_period: f64,
    pub s: f64,
    pub tolerances: Tolerances,
}

impl Fingerprint {
    pub fn of(cfg: &ExperimentConfig) -> Fingerprint {
        Fingerprint {
            revision: concat!("zerofilter-core ", env!("CARGO_PKG_VERSION")).to_string(),
            n_points: cfg.n_points,
            half_period: cfg.half_period,
            s: cfg.s,
            tolerances: cfg.tolerances.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: &'static str,
    pub table: Table,
    pub verdicts: Vec<Verdict>,
    /// Measured constants such as `C1` or the filtered-product ratio.
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub fingerprint: Fingerprint,
}

impl ExperimentResult {
    pub fn new(name: &'static str, table: Table, cfg: &ExperimentConfig) -> ExperimentResult {
        ExperimentResult {
            name,
            table,
            verdicts: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
            fingerprint: Fingerprint::of(cfg),
        }
    }

    pub fn verdict(&mut self, criterion: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            passed,
            advisory: false,
            detail: detail.into(),
        });
    }

    pub fn advisory(&mut self, criterion: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            criterion: criterion.to_string(),
            passed,
            advisory: true,
            detail: detail.into(),
        });
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    /// `"pass"`, `"fail"` or, for a result without rows, `"no-cases"`.
    pub fn overall(&self) -> &'static str {
        if self.table.rows.is_empty() {
            "no-cases"
        } else if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    /// True when every non-advisory verdict passed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed || v.advisory)
    }

    pub fn failed_criteria(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| !v.passed && !v.advisory)
            .map(|v| v.criterion.as_str())
            .collect()
    }
}

pub(crate) fn pass_label(ok: bool) -> Value {
    Value::from(if ok { "pass" } else { "fail" })
}
