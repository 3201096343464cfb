//! Command-line driver, file formats and parameter sweeps for `nsp-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
