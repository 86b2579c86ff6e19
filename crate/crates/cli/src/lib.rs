//! Experiment harness around `modest-core`: JSON configs, seeded parallel
//! runs, result and aggregate CSVs, run logs, plots and summary tables.

pub mod config;
pub mod error;
pub mod offline;
pub mod plot;
pub mod results;
pub mod runner;
pub mod stats;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use results::ResultRow;
pub use runner::{run_experiment, write_outputs, ExperimentResults};
