//! Experiment runner for boosting-based autoencoder ensembles.
//!
//! `bae run` sweeps the candidate depths, keeps the best ensemble and
//! repeats over seeds derived from a master seed. Each invocation writes one
//! scores CSV per run plus a self-describing `report.json`; `bae report`
//! merges reports into tables.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_baseline_sae, cmd_report, cmd_rerun, cmd_run, cmd_synth, Method};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use report::ExperimentReport;
