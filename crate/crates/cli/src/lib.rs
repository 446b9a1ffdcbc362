//! Command-line front end of `lkdual`: system specification files,
//! JSON reports and the subcommand implementations behind the `lkdual`
//! binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

pub use commands::{run, Cli, Command, EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK};
pub use error::CliError;
