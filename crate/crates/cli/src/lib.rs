//! Experiment runner for the homodyne-lhv simulator: config parsing,
//! deterministic execution and CSV/JSON-lines output.

pub mod config;
pub mod error;
pub mod format;
pub mod run;

pub use config::{Experiment, RunConfig};
pub use error::CliError;
pub use run::{execute, run, Artifacts};
