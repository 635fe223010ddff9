mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliResult;

/// Moran model with recombination: simulation, duality checks and exact
/// expectations.
#[derive(Parser)]
#[command(name = "moranrec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the population forward in time.
    SimulateForward(Common),
    /// Simulate the partitioning process backward in time.
    SimulateBackward(Common),
    /// Expected sampling functions for all partitions.
    Expectations(Common),
    /// Expected correlation functions, and the 3-site transform report.
    Lde(Common),
    /// Check the generator duality identity exactly.
    DualityCheck(Common),
    /// Fixation probabilities for two sites.
    Fixation(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of time points in [0, t_end].
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// finite, deterministic or diffusion.
    #[arg(long)]
    variant: Option<String>,
    /// Step every event, including silent ones.
    #[arg(long)]
    exact_events: bool,
    /// Skip per-replicate trajectory files.
    #[arg(long)]
    summary_only: bool,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let o = Overrides {
            seed: self.seed,
            replicates: self.reps,
            t_end: self.t_end,
            grid: self.grid,
            output: self.out.clone(),
            variant: self.variant.clone(),
            exact_events: self.exact_events,
            summary_only: self.summary_only,
        };
        RunConfig::load(&self.config, &o)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SimulateForward(c) => commands::simulate_forward(&c.load()?),
        Command::SimulateBackward(c) => commands::simulate_backward(&c.load()?),
        Command::Expectations(c) => commands::expectations(&c.load()?),
        Command::Lde(c) => commands::lde(&c.load()?),
        Command::DualityCheck(c) => commands::duality_check(&c.load()?),
        Command::Fixation(c) => commands::fixation(&c.load()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
