//! `cechlab`: twisted Čech cohomology, lifting obstructions, Chern numbers and
//! the Schwinger cocycle from declarative problem files.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cechlab_core::Error;
use clap::{Parser, Subcommand};

use commands::Mode;
use report::Report;

#[derive(Debug, Parser)]
#[command(name = "cechlab", version, about = "Twisted Čech cohomology and obstruction calculations on finite models")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override; the meaning depends on the command.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Grid points per axis for bundle computations.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Fourier truncation K (modes −K..K−1).
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    machine_readable: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cohomology of a twisted local system, plus class analysis of an
    /// optional cocycle.
    Cohomology {
        system: PathBuf,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Lifting obstruction of transition data through a central extension.
    Obstruction {
        transition: PathBuf,
        extension: PathBuf,
        lifts: Option<PathBuf>,
    },
    /// Schwinger cocycle, central extension and Dirac defect on matrix loops.
    Schwinger {
        #[arg(required = true)]
        loops: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Trace)]
        mode: Mode,
        /// Evaluate the trace below the exactness threshold.
        #[arg(long)]
        allow_under_truncated: bool,
    },
    /// Gauge residuals and Chern number of a gridded bundle.
    Chern { bundle: PathBuf },
    /// Run the built-in invariant suites.
    Verify {
        /// Restrict to a suite (cech, lifting, schwinger, connection).
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
}

/// Options shared by all commands.
pub struct Globals {
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub grid: Option<usize>,
    pub truncation: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or inconsistent input (exit 2).
    Input(String),
    /// A mathematical invariant does not hold (exit 3).
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotACocycle(_)
            | Error::NotU1Cocycle(_)
            | Error::LiftNotIntegral { .. }
            | Error::ValueNotInKernel(_)
            | Error::CocycleIdentityViolated(_)
            | Error::NotTwistedCocycle(_)
            | Error::TruncationTooSmall { .. }
            | Error::Overflow(_) => Failure::Invariant(msg),
            _ => Failure::Input(msg),
        }
    }
}

fn run(cli: &Cli, report: &mut Report) -> Result<(), Failure> {
    if let Some(t) = cli.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Input("--tolerance must be positive".into()));
        }
    }
    if matches!(cli.grid, Some(n) if !(3..=4001).contains(&n)) {
        return Err(Failure::Input("--grid must lie in 3..=4001".into()));
    }
    if matches!(cli.truncation, Some(k) if k > 512) {
        return Err(Failure::Input("--truncation above 512".into()));
    }
    let g = Globals { seed: cli.seed, tolerance: cli.tolerance, grid: cli.grid, truncation: cli.truncation };
    match &cli.command {
        Command::Cohomology { system, degree } => commands::cohomology(&g, system, *degree, report),
        Command::Obstruction { transition, extension, lifts } => {
            commands::obstruction_cmd(transition, extension, lifts.as_ref(), report)
        }
        Command::Schwinger { loops, mode, allow_under_truncated } => {
            commands::schwinger(&g, loops, *mode, *allow_under_truncated, report)
        }
        Command::Chern { bundle } => commands::chern(&g, bundle, report),
        Command::Verify { suites } => commands::verify(&g, suites, report),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let mut report = Report::new(echo.join(" "));
    let outcome = run(&cli, &mut report);
    let code = match &outcome {
        Ok(()) if report.all_passed() => 0,
        Ok(()) => 3,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("error: {msg}");
            report.status = Some(format!("invariant violation: {msg}"));
            3
        }
    };
    let text = if cli.machine_readable { report.render_json() } else { report.render_text() };
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
