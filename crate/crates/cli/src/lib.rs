//! Experiment runner for the `poisonbench` simulator: TOML configs with
//! dotted overrides, per-run `metrics.csv` + `manifest.json`, parallel
//! sweeps and the theory suite.

pub mod config;
pub mod error;
pub mod experiment;
pub mod suite;
pub mod sweep;

pub use config::{load_config, ExperimentConfig};
pub use error::CliError;
pub use experiment::{run_experiment, RunSummary};
