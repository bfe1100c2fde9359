//! Front end for pflab: configuration, orchestration and reports.
//!
//! Every subcommand reads an optional JSON config, runs, and writes a
//! `pflab-report/1` JSON document plus a CSV table. Exit codes: 0 success,
//! 1 invalid input or a failed check, 2 numerical non-convergence.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use commands::{Outcome, RunOptions};
use config::{BindingConfig, CoeffsConfig, FockSweepConfig, Invalid, VerifyConfig};
use report::{write_output, Timestamps};

#[derive(Debug, Parser)]
#[command(name = "pflab", version, about = "Self-energy expansion and enhanced binding checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file; missing keys take defaults, unknown keys are rejected.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Report path (stdout if absent). The CSV table goes next to it.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// CSV table path, overriding the config and the path derived from --out.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Seed for all random sampling, overriding the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "PFLAB_THREADS", value_name = "N")]
    pub threads: Option<usize>,
    /// Run verify on a deliberately asymmetric grid; the epsilon-tensor check must fail.
    #[arg(long, global = true)]
    pub negative_control: bool,
    /// Record wall-clock start and end times (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timestamps: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// First and second order coefficients by closed form, quadrature and Monte Carlo.
    Coeffs,
    /// Ground states on discretized Fock spaces over an alpha list.
    FockSweep,
    /// Zero resonance, truncation and binding margin scan.
    Binding,
    /// Invariant and identity checks.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::FockSweep => "fock-sweep",
            Command::Binding => "binding",
            Command::Verify => "verify",
        }
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn validated<T>(cfg: T, check: impl Fn(&T) -> Result<(), Invalid>) -> anyhow::Result<T> {
    check(&cfg)?;
    Ok(cfg)
}

/// Loads and validates the config, then runs the command.
pub fn execute(command: Command, config: Option<&Path>, opts: &RunOptions) -> anyhow::Result<(Outcome, Option<PathBuf>)> {
    Ok(match command {
        Command::Coeffs => {
            let cfg = validated(config::load::<CoeffsConfig>(config)?, CoeffsConfig::validate)?;
            (commands::coeffs::run(&cfg, opts), cfg.csv)
        }
        Command::FockSweep => {
            let cfg = validated(config::load::<FockSweepConfig>(config)?, FockSweepConfig::validate)?;
            (commands::fock_sweep::run(&cfg, opts), cfg.csv)
        }
        Command::Binding => {
            let cfg = validated(config::load::<BindingConfig>(config)?, BindingConfig::validate)?;
            (commands::binding::run(&cfg, opts), cfg.csv)
        }
        Command::Verify => {
            let cfg = validated(config::load::<VerifyConfig>(config)?, VerifyConfig::validate)?;
            (commands::verify::run(&cfg, opts), None)
        }
    })
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn try_run(cli: &Cli) -> anyhow::Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Invalid("--threads must be positive".into()).into());
        }
        // a second initialization (e.g. in-process tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let opts = RunOptions {
        seed: cli.seed,
        negative_control: cli.negative_control,
    };
    let started = unix_now();
    let (mut outcome, cfg_csv) = execute(cli.command, cli.config.as_deref(), &opts)?;
    if cli.timestamps {
        outcome.report.metadata.timestamps = Some(Timestamps {
            started_unix: started,
            finished_unix: unix_now(),
        });
    }
    write_output(&outcome.report.to_json(), cli.out.as_deref())?;
    let csv_path = cli
        .csv
        .clone()
        .or(cfg_csv)
        .or_else(|| cli.out.as_ref().map(|p| p.with_extension("csv")));
    if let (Some(t), Some(p)) = (&outcome.table, csv_path) {
        t.write(&p)?;
    }
    for w in &outcome.report.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    for c in outcome.report.diagnostics.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} (value {:e}, tolerance {:e})", c.name, c.value, c.tolerance);
    }
    if let Some(e) = &outcome.report.error {
        eprintln!("error: {e}");
    }
    Ok(outcome.report.status.exit_code())
}
