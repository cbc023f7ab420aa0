//! Experiment harness: configurations, runs, trace CSVs.

pub mod config;
pub mod experiment;

pub use config::{load_config, parse_config, RunConfig};
pub use experiment::{run_experiment, run_trace, ExperimentSummary, TraceRow, CSV_HEADER};
