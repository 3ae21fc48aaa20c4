//! Scenario runner for the bellbench laboratory.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod sweep;

use std::path::PathBuf;

use clap::Parser;

pub use config::{Format, ScenarioConfig, ScenarioName};
pub use error::CliError;
pub use scenarios::{run, ScenarioResult};

#[derive(Debug, Parser)]
#[command(name = "bellbench", version, about = "Reproduce Bell-inequality falsifications and checks")]
pub struct Args {
    /// Scenario to run (overrides the config file).
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    /// Flat TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pairs per Monte Carlo block.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Output file; defaults to $BELLBENCH_OUT_DIR/<scenario>.<ext> or stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Angle grid step in radians for searches and sweeps.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

impl Args {
    pub fn resolve(self) -> Result<ScenarioConfig, CliError> {
        let file = match &self.config {
            Some(path) => config::FileConfig::read(path)?,
            None => config::FileConfig::default(),
        };
        let flags = config::Overrides {
            scenario: self.scenario,
            seed: self.seed,
            pairs: self.pairs,
            out: self.out,
            format: self.format,
            grid_step: self.grid_step,
        };
        let out_dir = std::env::var_os(config::OUT_DIR_ENV).map(PathBuf::from);
        ScenarioConfig::resolve(file, flags, out_dir)
    }
}

/// Resolves, runs and writes one scenario.
pub fn execute(args: Args) -> Result<ScenarioResult, CliError> {
    let cfg = args.resolve()?;
    let result = run(&cfg)?;
    output::emit(&result, &cfg.output)?;
    Ok(result)
}
