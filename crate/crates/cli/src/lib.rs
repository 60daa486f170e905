//! Command implementations behind the `lidar-mot` binary.
//!
//! Exit statuses: 0 success, [`EXIT_USAGE`] for bad flags or configuration,
//! [`EXIT_DATA`] for missing or malformed input data.

pub mod bench;
pub mod config;
mod exit;
pub mod plot;
pub mod run;

pub use config::PipelineConfig;
pub use exit::{CliError, CliResult, EXIT_DATA, EXIT_USAGE};
