//! `cantilever-sim`: scenario runner producing CSV data and the cross-check
//! report.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(cantilever::Error),
    Verify(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<cantilever::Error> for CliError {
    fn from(e: cantilever::Error) -> Self {
        use cantilever::Error::*;
        match e {
            InvalidDevice(_) | InvalidArgument(_) | InvalidDimension(_) | InvalidTolerance(_)
            | NegativeDecay(_) | NegativeTemperature(_) | InvalidCoupling(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cantilever-sim", version, about = "Cantilever / charge-qubit scenario runner")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Globals {
    /// Scenario file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "CANTILEVER_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Fock truncation, overriding the scenario.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Integrator tolerance, overriding the scenario.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wigner function of the dissipative cat on a grid, per time.
    Wigner {
        /// Add a column from the dense density matrix.
        #[arg(long)]
        numeric: bool,
        /// Process the times in increasing order.
        #[arg(long)]
        sorted: bool,
    },
    /// Cat labels, phases and coherence along a time grid.
    CatEvolve {
        /// Add a brute-force comparison column.
        #[arg(long)]
        numeric: bool,
    },
    /// Position variance under the conditional unitary evolution.
    SqueezeUnitary,
    /// Position variance under damping, one column per temperature.
    SqueezeDissipative,
    /// Steady-state position variance against temperature.
    SteadySweep,
    /// Coupling constants from device parameters.
    Params,
    /// Run the cross-check suite.
    Verify {
        /// Deliberately corrupt one closed form to exercise the checks.
        #[arg(long, value_enum)]
        inject_fault: Option<verify::Fault>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.globals;
    if let Some(d) = g.dim {
        if d < 2 {
            return Err(CliError::Config(format!("--dim {d}: need at least 2 levels")));
        }
    }
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("--tol {t}: must be positive")));
        }
    }
    let cfg = config::Config::load(g.config.as_deref())?;
    match cli.command {
        Command::Wigner { numeric, sorted } => commands::wigner(g, cfg, numeric, sorted),
        Command::CatEvolve { numeric } => commands::cat_evolve(g, cfg, numeric),
        Command::SqueezeUnitary => commands::squeeze_unitary(g, cfg),
        Command::SqueezeDissipative => commands::squeeze_dissipative(g, cfg),
        Command::SteadySweep => commands::steady_sweep(g, cfg),
        Command::Params => commands::params(g, cfg),
        Command::Verify { inject_fault } => verify::run(g, cfg, inject_fault),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cantilever-sim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
