//! Command-line front end for `tunnellab`: configuration, subcommands,
//! figure data and deterministic CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;

pub use commands::{run, Command, Options, Outcome};
pub use config::RunConfig;
pub use error::CliError;
