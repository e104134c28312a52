//! Batch front end: configuration, sweeps, convergence checks and result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use config::RunConfig;
pub use error::CliError;
