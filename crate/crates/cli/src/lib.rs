//! Configuration, model files, reports and the commands behind the `stlf` binary.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod model_file;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, Result};
