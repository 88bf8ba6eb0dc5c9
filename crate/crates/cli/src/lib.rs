//! Library side of the `jetlag` binary: configuration, reports and the
//! subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::{Problem, ProblemConfig};
pub use error::CliError;
