//! Config-driven experiment runner.
//!
//! Each subcommand reads a TOML configuration, runs one experiment and writes
//! `<stem>.csv` with the data and `<stem>.json` with the resolved
//! configuration, its SHA-256, fitted quantities and threshold checks.
//!
//! Exit codes: 0 when every declared threshold holds, 2 when one fails, 1 on
//! any error.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod experiments;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{Check, Outcome, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("subcommand {subcommand} was given a config for {config}")]
    Mismatch {
        subcommand: &'static str,
        config: &'static str,
    },
    #[error(transparent)]
    Numeric(#[from] horolab::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "horolab",
    version,
    about = "Experiments on translated horospherical submanifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Multiplies every sample budget in the configuration.
    #[arg(long, value_name = "FLOAT")]
    pub budget_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curvature certificates on a parameter grid.
    CertifyCurvature(RunArgs),
    /// Sublevel-set measure exponent of a polynomial.
    Sublevel(RunArgs),
    /// Completing-the-square diagonalization on sample points.
    DiagonalizeDemo(RunArgs),
    /// Fourier decay of a surface measure.
    FourierDecay(RunArgs),
    /// Discrepancy of translated submanifold averages.
    Equidistribute(RunArgs),
    /// Decay of correlations under the diagonal flow.
    Mixing(RunArgs),
    /// Horocycle integrals against a character.
    Horocycle(RunArgs),
}

impl Command {
    pub fn parts(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Command::CertifyCurvature(a) => (ExperimentKind::CertifyCurvature, a),
            Command::Sublevel(a) => (ExperimentKind::Sublevel, a),
            Command::DiagonalizeDemo(a) => (ExperimentKind::DiagonalizeDemo, a),
            Command::FourierDecay(a) => (ExperimentKind::FourierDecay, a),
            Command::Equidistribute(a) => (ExperimentKind::Equidistribute, a),
            Command::Mixing(a) => (ExperimentKind::Mixing, a),
            Command::Horocycle(a) => (ExperimentKind::Horocycle, a),
        }
    }
}

/// Paths and verdict of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Loads the config named by `args` and applies the command-line overrides.
pub fn resolve(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(CliError::Mismatch {
            subcommand: kind.name(),
            config: cfg.experiment.name(),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(s) = args.budget_scale {
        cfg.budget_scale *= s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    format!("{:x}", Sha256::digest(cfg.to_toml().as_bytes()))
}

fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Runs a resolved configuration and writes its artifacts.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let outcome = match horolab::par::workers_from_env() {
        Some(n) => horolab::par::with_workers(n, || experiments::run(cfg)),
        None => experiments::run(cfg),
    }?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let stem = cfg.stem();
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_csv(&csv_path, &outcome.table)?;
    let passed = outcome.checks.iter().all(|c| c.passed);
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "data": format!("{stem}.csv"),
        "results": outcome.results,
        "checks": outcome.checks,
        "passed": passed,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, text + "\n").map_err(|e| CliError::Io {
        path: json_path.clone(),
        message: e.to_string(),
    })?;
    Ok(RunReport {
        csv: csv_path,
        json: json_path,
        passed,
        checks: outcome.checks,
    })
}

/// Parses arguments, runs, reports, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (kind, args) = cli.command.parts();
    match resolve(kind, args).and_then(|cfg| execute(&cfg)) {
        Ok(report) => {
            for c in &report.checks {
                let mark = if c.passed { "ok" } else { "FAILED" };
                println!(
                    "{:<26} {:>14.6e} {} {:<12e} {mark}",
                    c.name, c.value, c.comparison, c.threshold
                );
            }
            println!("wrote {} and {}", report.csv.display(), report.json.display());
            if report.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
