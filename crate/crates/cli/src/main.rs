//! Batch front end for the `formation` library.

mod report;
mod run;
mod sample;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "formation",
    version,
    about = "Entanglement of formation, its conjugate, and additivity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Von Neumann entropy of a state and of both reductions.
    Entropy(RunArgs),
    /// Entanglement of formation by convex-roof minimization.
    Eof(RunArgs),
    /// Closed-form concurrence and entanglement of formation of two qubits.
    Wootters(RunArgs),
    /// The conjugate E*(H) of an observable.
    Conjugate(RunArgs),
    /// Weak duality Tr(ρH) − E*(H) ≤ E_F(ρ) for (state, observable) pairs.
    DualityCheck(RunArgs),
    /// Additivity gap for state pairs, or conjugate additivity for observable pairs.
    Additivity(RunArgs),
    /// Strong superadditivity gap of four-party states.
    Superadditivity(RunArgs),
    /// Step-by-step check that additivity implies strong superadditivity.
    TheoremCheck(RunArgs),
    /// Writes a seeded random state or observable as a canonical file.
    Sample(sample::SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Input file; repeat for batches. Pair commands consume inputs two at a time.
    #[arg(short, long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Read every input as a four-party state with these dims (d1a d1b d2a d2b).
    #[arg(long, num_args = 4, value_names = ["D1A", "D1B", "D2A", "D2B"])]
    pub four_party: Option<Vec<usize>>,
    /// Random restarts per optimization.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Gradient-norm tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Number of ensemble members in the convex-roof search.
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    /// Seed for every random draw; generated and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for batch inputs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(args) => sample::run(&args),
        Command::Entropy(args) => run::execute(run::Op::Entropy, &args),
        Command::Eof(args) => run::execute(run::Op::Eof, &args),
        Command::Wootters(args) => run::execute(run::Op::Wootters, &args),
        Command::Conjugate(args) => run::execute(run::Op::Conjugate, &args),
        Command::DualityCheck(args) => run::execute(run::Op::DualityCheck, &args),
        Command::Additivity(args) => run::execute(run::Op::Additivity, &args),
        Command::Superadditivity(args) => run::execute(run::Op::Superadditivity, &args),
        Command::TheoremCheck(args) => run::execute(run::Op::TheoremCheck, &args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::FAILURE
        }
    }
}

/// A seed drawn from the process's hashing entropy, for runs without `--seed`.
pub fn fresh_seed() -> u64 {
    use std::hash::{BuildHasher, RandomState};
    RandomState::new().hash_one(std::time::SystemTime::now())
}

pub fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p.display(), &e)),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", &e))
        }
    }
}
