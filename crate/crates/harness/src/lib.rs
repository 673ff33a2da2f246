//! Experiment runner behind the `dbm-lab` command line tool.
//!
//! A run reads a flat TOML config, looks the experiment kind up in a
//! [`Registry`], writes CSV tables (and SVG plots on request) into an output
//! directory and finishes with `report.json`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plots;

pub use config::{line_of, load_config, validate_config, ExperimentConfig};
pub use error::{Downstream, HarnessError};
pub use experiments::{Experiment, ExperimentReport, Outcome, Registry, RunContext, SCHEMA_VERSION};
pub use output::OutputDir;
