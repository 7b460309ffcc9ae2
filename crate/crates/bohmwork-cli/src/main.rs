//! Scenario-driven command line for Bohmian work statistics:
//! `run` executes one configured scenario, `compare` sweeps both thermal
//! mixtures plus the two-point-measurement reference over a beta list, and
//! `plot` renders result files as SVG.

// validations use `!(x > 0.0)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod pipeline;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bohmwork_core::BohmError;
use config::{apply_override, ScenarioConfig};

#[derive(Parser)]
#[command(name = "bohmwork", version, about = "Quantum work from Bohmian trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write summary.json plus result files.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override config values as dotted.path=value (repeatable).
        #[arg(long = "set")]
        set: Vec<String>,
        /// Write the propagated snapshot series (numeric engine only).
        #[arg(long)]
        dump_snapshots: bool,
        /// Write an inspection trajectory ensemble as CSV.
        #[arg(long)]
        dump_trajectories: bool,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sweep both thermal mixtures and the measurement reference over betas.
    Compare {
        config: PathBuf,
        /// Comma-separated inverse temperatures.
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render work_hist.csv and trajectories.csv from a results directory.
    Plot { results: PathBuf },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration and validation problems, 3 for numerical failures.
fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Config(_) => 2,
        CliError::Core(err) => match err {
            BohmError::InvalidGrid(_)
            | BohmError::InvalidParameter(_)
            | BohmError::InvalidPlan(_)
            | BohmError::StepTooLarge { .. }
            | BohmError::TruncationBound { .. }
            | BohmError::AllocationTooSmall { .. } => 2,
            _ => 3,
        },
    }
}

enum CliError {
    Config(String),
    Core(BohmError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<BohmError> for CliError {
    fn from(e: BohmError) -> Self {
        CliError::Core(e)
    }
}

fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
    for assignment in overrides {
        apply_override(&mut doc, assignment).map_err(CliError::Config)?;
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Run { config, out, set, dump_snapshots, dump_trajectories, threads } => {
            init_threads(threads)?;
            let cfg = load_config(&config, &set)?;
            cfg.validate()?;
            let flags = pipeline::DumpFlags {
                snapshots: dump_snapshots,
                trajectories: dump_trajectories,
            };
            pipeline::run(&cfg, &out, &flags)?;
            println!("wrote {}", out.join("summary.json").display());
            Ok(())
        }
        Command::Compare { config, betas, out, threads } => {
            init_threads(threads)?;
            let cfg = load_config(&config, &[])?;
            let betas = if betas.is_empty() {
                cfg.compare_betas.clone().ok_or_else(|| {
                    CliError::Config(
                        "compare needs --betas or a compare_betas config entry".into(),
                    )
                })?
            } else {
                betas
            };
            pipeline::compare(&cfg, &betas, &out)?;
            println!("wrote {}", out.join("compare.json").display());
            Ok(())
        }
        Command::Plot { results } => plot(&results),
    }
}

fn plot(results: &Path) -> Result<(), CliError> {
    let hist_path = results.join("work_hist.csv");
    let hist_raw = std::fs::read_to_string(&hist_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", hist_path.display())))?;
    let mut bins = Vec::new();
    for line in hist_raw.lines().skip(1) {
        let mut cols = line.split(',');
        let lo: f64 = parse_col(cols.next(), line)?;
        let hi: f64 = parse_col(cols.next(), line)?;
        let mass: f64 = parse_col(cols.next(), line)?;
        bins.push((lo, hi, mass));
    }
    if bins.is_empty() {
        return Err(CliError::Config("work_hist.csv contains no bins".into()));
    }
    svg::work_histogram(&bins, &results.join("work_hist.svg"))?;

    let traj_path = results.join("trajectories.csv");
    if traj_path.exists() {
        let raw = std::fs::read_to_string(&traj_path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", traj_path.display())))?;
        let mut rows = Vec::new();
        for line in raw.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 4 {
                continue;
            }
            let sample: usize =
                cols[0].parse().map_err(|_| CliError::Config(format!("bad row: {line}")))?;
            let t: f64 =
                cols[2].parse().map_err(|_| CliError::Config(format!("bad row: {line}")))?;
            let x: f64 =
                cols[3].parse().map_err(|_| CliError::Config(format!("bad row: {line}")))?;
            rows.push((sample, t, x));
        }
        svg::trajectory_fan(&rows, &results.join("trajectories.svg"))?;
    }
    println!("wrote plots into {}", results.display());
    Ok(())
}

fn parse_col(col: Option<&str>, line: &str) -> Result<f64, CliError> {
    col.and_then(|c| c.parse().ok())
        .ok_or_else(|| CliError::Config(format!("bad histogram row: {line}")))
}
