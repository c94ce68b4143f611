//! Command-line driver: configuration, orchestration and output.

pub mod config;
pub mod emit;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;
use zerofilter_core::experiments::{
    run_lemma_suite, run_nonuniform, run_operator_bench, run_taylor_order, run_zero_filter_limit,
    ExperimentConfig, ExperimentResult,
};

pub use config::parse_config;
pub use emit::emit_results;

/// Exit status for configuration problems.
pub const EXIT_CONFIG: i32 = 64;
/// Exit status when the solver or a construction fails.
pub const EXIT_NUMERIC: i32 = 70;
/// Exit status for file-system failures.
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config file not found: {0}")]
    MissingFile(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numeric(#[from] zerofilter_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile(_) | CliError::Parse { .. } | CliError::Validation(_) => {
                EXIT_CONFIG
            }
            CliError::Io { .. } => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

/// One experiment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Lemmas,
    Thm1,
    Prop1,
    Thm2,
    Bench,
}

impl Experiment {
    /// Families run by `all`, in order. The benchmark is excluded because its
    /// timings differ between runs.
    pub const ALL: [Experiment; 4] = [
        Experiment::Lemmas,
        Experiment::Thm1,
        Experiment::Prop1,
        Experiment::Thm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Lemmas => "lemmas",
            Experiment::Thm1 => "thm1",
            Experiment::Prop1 => "prop1",
            Experiment::Thm2 => "thm2",
            Experiment::Bench => "bench",
        }
    }

    /// Bit set in the exit status when this family fails.
    pub fn failure_bit(self) -> i32 {
        match self {
            Experiment::Lemmas => 1,
            Experiment::Thm1 => 2,
            Experiment::Prop1 => 4,
            Experiment::Thm2 => 8,
            Experiment::Bench => 16,
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> zerofilter_core::Result<ExperimentResult> {
        match self {
            Experiment::Lemmas => run_lemma_suite(cfg),
            Experiment::Thm1 => run_zero_filter_limit(cfg),
            Experiment::Prop1 => run_taylor_order(cfg),
            Experiment::Thm2 => run_nonuniform(cfg),
            Experiment::Bench => run_operator_bench(cfg),
        }
    }
}

/// Run metadata; the only output that records wall-clock time.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub version: &'static str,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct RunOutcome {
    pub results: Vec<ExperimentResult>,
    pub outputs: Vec<PathBuf>,
    /// 0 when every verdict passed, otherwise the OR of the failure bits.
    pub exit_code: i32,
}

/// Runs `experiments` in order and writes their outputs into `out_dir`.
pub fn run(
    subcommand: &str,
    experiments: &[Experiment],
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunOutcome, CliError> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;

    let mut results = Vec::new();
    let mut outputs = Vec::new();
    let mut exit_code = 0;
    for &exp in experiments {
        let result = exp.run(cfg)?;
        outputs.extend(emit_results(&result, cfg, out_dir)?);
        if !result.passed() {
            exit_code |= exp.failure_bit();
        }
        println!("{}", status_line(&result));
        results.push(result);
    }
    if experiments.len() > 1 {
        let path = out_dir.join("report.md");
        emit::write_file(&path, &report::render(&results))?;
        outputs.push(path);
    }

    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        config: cfg.clone(),
        out_dir: out_dir.to_path_buf(),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started,
        wall_seconds: clock.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
    };
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
    text.push('\n');
    emit::write_file(&path, &text)?;
    Ok(RunOutcome {
        results,
        outputs,
        exit_code,
    })
}

fn status_line(result: &ExperimentResult) -> String {
    let failed = result.failed_criteria();
    if failed.is_empty() {
        format!(
            "{}: {} ({} rows)",
            result.name,
            result.overall(),
            result.table.rows.len()
        )
    } else {
        format!(
            "{}: {} ({} rows; failed: {})",
            result.name,
            result.overall(),
            result.table.rows.len(),
            failed.join(", ")
        )
    }
}
