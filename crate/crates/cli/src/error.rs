//! Errors surfaced by the command-line front end. Every variant maps to
//! exit code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error at line {line}{}: {msg}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Spec {
        line: usize,
        column: Option<usize>,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] lkdual::Error),
}
