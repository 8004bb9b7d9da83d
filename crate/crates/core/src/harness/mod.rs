//! Experiment harness: configs, figure presets, runs and CSV artifacts.

pub mod config;
mod error;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, InitSpec, ModelSpec, Overrides};
pub use error::{exit_code, HarnessError};
pub use output::quantile_bands;
pub use presets::{preset, PRESETS};
pub use runner::{run_config, run_experiment, run_preset, RunOptions, RunSeries, RunSummary};
