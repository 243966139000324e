use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use noma_pfs_cli::output::write_outputs;
use noma_pfs_cli::selfcheck::run_selfcheck;
use noma_pfs_cli::{run_sweep, ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMode {
    Sim,
    Estimate,
    Both,
    Selfcheck,
}

/// Simulates proportional-fair NOMA scheduling and compares it with the
/// analytical rate estimate.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML experiment config; omitted keys take the reference defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Directory for results.csv, deviations.csv and manifest.json.
    #[arg(short, long, default_value = "out")]
    output: PathBuf,

    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(short, long)]
    jobs: Option<usize>,

    /// Overrides the mode of the config.
    #[arg(short, long, value_enum)]
    mode: Option<RunMode>,

    /// Leave the runtime column empty so that repeated runs are byte-identical.
    #[arg(long)]
    omit_runtime: bool,
}

fn run(args: Args) -> Result<bool> {
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .context("cannot start the worker pool")?;
    }
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match args.mode {
        Some(RunMode::Selfcheck) => {
            let lines = run_selfcheck(cfg.seed);
            println!(
                "{:<40} {:>7} {:>8} {:>12} {:>8}  result",
                "suite", "cases", "failures", "worst", "seconds"
            );
            for l in &lines {
                println!(
                    "{:<40} {:>7} {:>8} {:>12.3e} {:>8.2}  {}",
                    l.name,
                    l.cases,
                    l.failures,
                    l.worst,
                    l.seconds,
                    if l.passed { "PASS" } else { "FAIL" }
                );
            }
            return Ok(lines.iter().all(|l| l.passed));
        }
        Some(RunMode::Sim) => cfg.mode = Mode::Sim,
        Some(RunMode::Estimate) => cfg.mode = Mode::Estimate,
        Some(RunMode::Both) => cfg.mode = Mode::Both,
        None => {}
    }
    let out = run_sweep(&cfg, !args.omit_runtime);
    write_outputs(&args.output, &cfg, &out)?;
    let failed = out
        .rows
        .iter()
        .filter(|r| r.status != noma_pfs_cli::Status::Ok)
        .count();
    eprintln!(
        "{} rows written to {} ({failed} with a non-ok status)",
        out.rows.len(),
        args.output.display()
    );
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
