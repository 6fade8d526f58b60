//! The `emobalance` command-line pipeline: ingest → analyze → index → select → serve →
//! merge → evaluate → report, plus the synthetic bias-mitigation experiment.

pub mod client;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod simulate;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
