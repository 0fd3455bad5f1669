//! Pipeline driver: plant files, configuration, staged runs.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod plant;

pub use error::{CliError, CliResult};
