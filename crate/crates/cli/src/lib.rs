//! Configuration loading, experiment orchestration and report emission for
//! the `stabgap` command-line tool.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, OutputFormat};
pub use report::{emit, emit_gap, GapDocument, ReportDocument, Table, SCHEMA_VERSION};
pub use runner::{build_setup, run, run_gap, Setup};
