//! Batch command-line front end.
//!
//! Exit codes: 0 success, 1 validation, 2 runtime (I/O or failed self-test),
//! 3 comparison threshold exceeded.

pub mod commands;
pub mod config;
pub mod csv;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use commands::Report;
use config::{Estimator, RunConfig};
use selftest::SelftestOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "synclab", version, about = "Clock-synchronization network: simulation and exact moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo ensemble of (R, D, d).
    Simulate,
    /// Closed-form moments on a time grid.
    Analytic {
        /// Add RK4 solutions of the moment ODE.
        #[arg(long)]
        ode: bool,
        /// Append the t -> infinity rows.
        #[arg(long)]
        limits: bool,
    },
    /// Simulation against the closed form, with z-scores.
    Compare {
        #[arg(long, value_enum)]
        estimator: Option<Estimator>,
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Scaling exponents of D over time scales t = s N^gamma.
    PhaseScan,
    /// Stationary limits, exact and large-N.
    Limits,
    /// Runs the built-in oracle suites.
    Selftest {
        /// Negative control: perturbs the jump matrix.
        #[arg(long, hide = true)]
        perturb_k: bool,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_RUNTIME,
        _ => EXIT_VALIDATION,
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    RunConfig::load(path)
}

fn dispatch(cli: &Cli) -> Result<(Report, Option<PathBuf>)> {
    if let Command::Selftest { perturb_k } = cli.command {
        let results = selftest::run_suites(SelftestOptions { perturb_k })?;
        let failed = !results.iter().all(selftest::SuiteResult::passed);
        let report = Report {
            body: selftest::render(&results),
            notes: Vec::new(),
            failed,
        };
        return Ok((report, cli.out.clone()));
    }
    let cfg = load(cli)?;
    let report = match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, cli.seed)?,
        Command::Analytic { ode, limits } => commands::cmd_analytic(&cfg, *ode, *limits)?,
        Command::Compare { estimator, z_threshold } => commands::cmd_compare(
            &cfg,
            cli.seed,
            estimator.unwrap_or(cfg.compare.estimator),
            z_threshold.unwrap_or(cfg.compare.z_threshold),
        )?,
        Command::PhaseScan => commands::cmd_phase_scan(&cfg)?,
        Command::Limits => commands::cmd_limits(&cfg)?,
        Command::Selftest { .. } => unreachable!(),
    };
    Ok((report, cli.out.clone().or(cfg.output.clone())))
}

fn execute(cli: &Cli) -> Result<i32> {
    let (report, out) = dispatch(cli)?;
    match out {
        Some(path) => csv::write_atomic(&path, report.body.as_bytes())?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(report.body.as_bytes());
        }
    }
    for note in &report.notes {
        eprintln!("{note}");
    }
    Ok(match (&cli.command, report.failed) {
        (_, false) => EXIT_OK,
        (Command::Compare { .. }, true) => EXIT_THRESHOLD,
        (_, true) => EXIT_RUNTIME,
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidInput("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
