//! Command-line runner for netbaseline: dataset simulation, single-matrix
//! decomposition, the full evaluation and re-scoring of saved results.

pub mod config;
pub mod dataset;
pub mod decompose;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::{ExperimentConfig, FlagOverrides, Method, Preset};
pub use decompose::cmd_decompose;
pub use error::{CliError, Result};
pub use experiment::{cmd_experiment, cmd_metrics};

/// Writes the configured dataset to `output_dir`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<dataset::Manifest> {
    cfg.validate()?;
    dataset::write_dataset(&cfg.output_dir, &cfg.simulation(), &cfg.layout())
}
