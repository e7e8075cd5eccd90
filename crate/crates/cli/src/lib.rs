//! Experiment runner for `stackelberg-core`: TOML configs in, CSV traces,
//! a JSON summary and optional SVG plots out.

pub mod config;
pub mod experiment;
pub mod market_io;
pub mod output;
pub mod plot;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, RunOptions};
pub use output::{emit_csv, load_csv, read_csv, write_csv, ExperimentSummary, RunSummary, Table};
