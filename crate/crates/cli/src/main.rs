//! `povm-dyn`: run POVM measurement-dynamics scenarios from JSON configs.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 I/O failure, 4 numerical failure.

mod config;
mod scenario;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use povm_dyn::fixtures::{basis_pvm, random_povm, seeded_rng, trine_povm};
use povm_dyn::povm_file::povm_to_json;
use serde::Serialize;

use crate::config::{load, violations, Overrides};
use crate::scenario::{
    cpt_section, prepare, run_trace, summarize, to_pretty, trace_csv, triad_section, write_file,
};

pub const THREADS_ENV: &str = "POVM_DYN_THREADS";

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<povm_dyn::Error> for CliError {
    fn from(e: povm_dyn::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "povm-dyn", version, about = "Dynamical models of generalized quantum measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// Qubit trine POVM.
    Trine,
    /// Computational-basis PVM of dimension `--dim`.
    Pvm,
    /// Seeded random POVM with `--dim` and `--outcomes`.
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a config and its POVM without running; lists every violation.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evolve the chain model; writes trace.csv and summary.json.
    Simulate {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Audit complete positivity of the induced maps; prints JSON.
    AuditCpt {
        config: PathBuf,
        /// Also audit a forced map whose pointers all overlap by this value.
        #[arg(long)]
        overlap: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// System + ancilla + apparatus statistics; prints JSON.
    Triad {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a reference POVM as JSON.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        outcomes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct ValidationReport {
    config: String,
    valid: bool,
    violations: Vec<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

fn validate(config: PathBuf, overrides: Overrides) -> Result<bool, CliError> {
    let found = match load(&config, &overrides) {
        Ok(loaded) => violations(&loaded)?,
        Err(CliError::Validation(m)) => vec![m],
        Err(e) => return Err(e),
    };
    let report = ValidationReport {
        config: config.display().to_string(),
        valid: found.is_empty(),
        violations: found,
    };
    print!("{}", to_pretty(&report));
    Ok(report.valid)
}

fn simulate(config: PathBuf, out: PathBuf, overrides: Overrides) -> Result<(), CliError> {
    let p = prepare(&load(&config, &overrides)?)?;
    let trace = run_trace(&p)?;
    let summary = summarize(&p, &trace)?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    write_file(&out.join("trace.csv"), &trace_csv(&trace, p.spec.n_l()))?;
    write_file(&out.join("summary.json"), &to_pretty(&summary))?;
    eprintln!(
        "status {}: {} samples written to {}",
        summary.status,
        summary.samples,
        out.display()
    );
    Ok(())
}

fn audit_cpt(config: PathBuf, overlap: Option<f64>, overrides: Overrides) -> Result<(), CliError> {
    let p = prepare(&load(&config, &overrides)?)?;
    let trace = run_trace(&p)?;
    print!("{}", to_pretty(&cpt_section(&p, &trace, overlap)?));
    Ok(())
}

fn triad(config: PathBuf, overrides: Overrides) -> Result<(), CliError> {
    let p = prepare(&load(&config, &overrides)?)?;
    let nm = povm_dyn::naimark::naimark_unitary(&p.ms)?;
    print!("{}", to_pretty(&triad_section(&p, &nm)?));
    Ok(())
}

fn fixture(kind: FixtureKind, dim: usize, outcomes: usize, seed: u64, out: Option<PathBuf>) -> Result<(), CliError> {
    if dim == 0 || outcomes == 0 {
        return Err(CliError::Validation("dim and outcomes must be positive".into()));
    }
    let povm = match kind {
        FixtureKind::Trine => trine_povm(),
        FixtureKind::Pvm => basis_pvm(dim),
        FixtureKind::Random => random_povm(&mut seeded_rng(seed), dim, outcomes),
    };
    let text = povm_to_json(&povm) + "\n";
    match out {
        Some(path) => write_file(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Validate { config, overrides } => {
            return Ok(if validate(config, overrides)? {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            });
        }
        Command::Simulate { config, out, overrides } => simulate(config, out, overrides)?,
        Command::AuditCpt {
            config,
            overlap,
            overrides,
        } => audit_cpt(config, overlap, overrides)?,
        Command::Triad { config, overrides } => triad(config, overrides)?,
        Command::Fixture {
            kind,
            dim,
            outcomes,
            seed,
            out,
        } => fixture(kind, dim, outcomes, seed, out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("povm-dyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
