//! Command-line front end. Every command writes CSV files plus a
//! `metadata.json` holding the fully resolved configuration; passing that
//! file back through `--config` repeats the run.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run_circuit_sim, run_multiply_map, run_state_diagram, run_train, Metadata};
pub use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "fluxcell", version, about = "Superconducting nanowire crossbar simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the MNIST network for each requested state count.
    Train(CommonArgs),
    /// Set-mode programming sweep read back through the yTron.
    StateDiagram(CommonArgs),
    /// Normalized readout over programming input and ramp slope.
    MultiplyMap(CommonArgs),
    /// Electrothermal transient of a netlist driven by a pulse train.
    CircuitSim(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config, or metadata.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated state counts.
    #[arg(long, value_delimiter = ',')]
    pub states: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Include the floating-point reference run.
    #[arg(long)]
    pub baseline: bool,
}

impl CommonArgs {
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(states) = &self.states {
            cfg.train.states = states.clone();
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if self.baseline {
            cfg.train.baseline = true;
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => run_train(a.resolve()?, &a.out).map(drop),
        Command::StateDiagram(a) => run_state_diagram(a.resolve()?, &a.out).map(drop),
        Command::MultiplyMap(a) => run_multiply_map(a.resolve()?, &a.out).map(drop),
        Command::CircuitSim(a) => run_circuit_sim(a.resolve()?, &a.out).map(drop),
    }
}
