//! `locc`: command-line front end for the controlled-phase LOCC simulator.
//!
//! Exit codes: 0 on success, 1 when an internal invariant fails, 2 for
//! invalid arguments or input files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locc_core::Error;

use output::{Config, Format};

#[derive(Parser, Debug)]
#[command(
    name = "locc",
    version,
    about = "Simulate and analyse LOCC protocols for controlled-phase gates"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "LOCC_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial loops (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format (default: json for `markov`, csv otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the probabilistic half (or the composite) and compare with the closed form.
    Protocol(commands::ProtocolArgs),
    /// Cost curve, four-round break-even angle, or trade-off report.
    Cost(commands::CostArgs),
    /// Markovianizing cost of a gate.
    Markov(commands::MarkovArgs),
    /// Monte Carlo estimate of the n-shot failure probability.
    Nshot(commands::NshotArgs),
    /// Typical-set concentration scan or dilution feasibility.
    Typicality(commands::TypicalityArgs),
}

enum Failure {
    User(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_)
            | Error::NotCptp(_)
            | Error::NoConvergence(_)
            | Error::BranchLimit(_)
            | Error::BudgetExhausted(_)
            | Error::Locality(_)
            | Error::NegativeEigenvalue(_) => Failure::Internal(e.to_string()),
            _ => Failure::User(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = cli
        .global
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Failure::User("--workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;

    let seed = cli.global.seed;
    let mut config: Config = vec![
        ("tool", format!("locc {}", env!("CARGO_PKG_VERSION"))),
        ("seed", seed.to_string()),
        ("workers", workers.to_string()),
    ];
    let (report, default_format) = pool.install(|| -> Result<_, Failure> {
        Ok(match &cli.command {
            Command::Protocol(a) => (commands::protocol(a, seed, &mut config)?, Format::Csv),
            Command::Cost(a) => (commands::cost(a, &mut config)?, Format::Csv),
            Command::Markov(a) => (commands::markov(a, &mut config)?, Format::Json),
            Command::Nshot(a) => (commands::nshot(a, seed, &mut config)?, Format::Csv),
            Command::Typicality(a) => (commands::typicality(a, &mut config)?, Format::Csv),
        })
    })?;
    let format = cli.global.format.unwrap_or(default_format);
    config.push(("format", format!("{format:?}").to_lowercase()));
    let bytes = output::render(&report, &config, format).map_err(|e| Failure::Internal(e.to_string()))?;
    output::emit(&bytes, cli.global.output.as_deref()).map_err(|e| Failure::User(format!("cannot write output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
