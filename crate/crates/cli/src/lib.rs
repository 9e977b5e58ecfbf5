//! The `focal-reward` command-line driver.

pub mod args;
pub mod commands;
pub mod config;
pub mod plot;
pub mod seeds;

pub use args::{Cli, Command};
pub use commands::{run, Outcome};
pub use config::ExperimentConfig;
