//! Experiment harness for `daivl-core`: TOML configuration, parallel seeded
//! sweeps, CSV formats, ground-truth extraction from tabular data and SVG
//! plots.

pub mod app;
pub mod config;
pub mod csvio;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod plot;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
