//! `polyground <command> --config <path> [--out <dir>] [--seed <n>] [--tol <x>] [--max-iter <n>]`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use polyground::Error;

use crate::config::parse_config;
use crate::report::{write_report, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Solve,
    Identities,
    Threshold,
    Gn,
    Lift,
    Evolve,
    Scan,
    Probe,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Identities => "identities",
            Command::Threshold => "threshold",
            Command::Gn => "gn",
            Command::Lift => "lift",
            Command::Evolve => "evolve",
            Command::Scan => "scan",
            Command::Probe => "probe",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polyground",
    version,
    about = "Normalized ground states of singular polyharmonic NLS"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_CONSTRAINT: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;
pub const EXIT_REFUSED: u8 = 5;
pub const EXIT_IO: u8 = 6;

/// A failed run: exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    pub fn constraint(name: &str, detail: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONSTRAINT,
            message: format!("constraint violated: {name} ({detail})"),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("I/O: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Constraint { .. }
            | Error::Admissibility { .. }
            | Error::Unsupported(_)
            | Error::Range(_)
            | Error::GridMismatch(_) => EXIT_CONSTRAINT,
            Error::Threshold { .. } | Error::RetractionInfeasible(_) | Error::ZeroMass => EXIT_REFUSED,
            Error::NotConverged { .. }
            | Error::BlowUp { .. }
            | Error::NonFinite(_)
            | Error::LinearSolve(_)
            | Error::Bracket(_) => EXIT_NOT_CONVERGED,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// `POLYGROUND_THREADS`, defaulting to the available parallelism.
fn thread_bound() -> Result<usize, Failure> {
    match std::env::var("POLYGROUND_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::constraint("POLYGROUND_THREADS ≥ 1", format!("{v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn run(cli: &Cli, report: &mut Report) -> Result<(), Failure> {
    report.threads = thread_bound()?;
    let mut cfg = parse_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.solver.tol = t;
    }
    if let Some(n) = cli.max_iter {
        cfg.solver.max_iter = n;
    }
    report.config = Some(cfg.clone());
    let resolved = cfg.resolve()?;
    commands::run_command(cli.command, &cfg, &resolved, &cli.out, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = Report::new(cli.command.name(), None, 1);
    let outcome = run(&cli, &mut report);
    let code = match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("polyground {}: {}", cli.command.name(), f.message);
            report.failed = true;
            report.error = Some(f.message);
            f.code
        }
    };
    report.exit_code = code as i32;
    if let Err(e) = write_report(&report, &cli.out) {
        eprintln!("polyground: cannot write report into {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::from(code)
}
