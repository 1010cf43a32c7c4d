//! Command-line front end for `mlpnp`: solve correspondence files, generate
//! synthetic scenes, and run the benchmark and covariance-feedback sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use error::{CliError, CliResult};
