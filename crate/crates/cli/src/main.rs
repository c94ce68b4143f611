use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use zerofilter::{parse_config, run, CliError, Experiment, EXIT_CONFIG};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    /// Zero-filter limit for fixed data
    Thm1,
    /// Second-order short-time expansion
    Prop1,
    /// Non-uniform convergence counterexample
    Thm2,
    /// Support, scaling and multiplier checks
    Lemmas,
    /// Multiplier vs kernel timings
    Bench,
    /// lemmas, thm1, prop1 and thm2
    All,
}

#[derive(Debug, Parser)]
#[command(
    name = "zerofilter",
    version,
    about = "Filtered Camassa-Holm / Burgers experiments"
)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,

    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. --set n_range=4..6
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory [default: the config's out_dir, else ./results]
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads
    #[arg(long, env = "ZEROFILTER_THREADS")]
    threads: Option<usize>,
}

fn execute(args: Args) -> Result<i32, CliError> {
    let cfg = parse_config(args.config.as_deref(), &args.overrides)?;
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let experiments: Vec<Experiment> = match args.subcommand {
        Subcommand::Thm1 => vec![Experiment::Thm1],
        Subcommand::Prop1 => vec![Experiment::Prop1],
        Subcommand::Thm2 => vec![Experiment::Thm2],
        Subcommand::Lemmas => vec![Experiment::Lemmas],
        Subcommand::Bench => vec![Experiment::Bench],
        Subcommand::All => Experiment::ALL.to_vec(),
    };
    let name = format!("{:?}", args.subcommand).to_lowercase();
    let out = args
        .out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok(run(&name, &experiments, &cfg, &out)?.exit_code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("zerofilter: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
