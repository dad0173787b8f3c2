//! Terminal REPL, batch evaluation and HTTP service around `nlcmd-core`.

pub mod files;
pub mod repl;
pub mod service;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read knowledge base {path}: {message}")]
    KbUnavailable { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] nlcmd_core::eval::EvalError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for problems with how the program was invoked (including a KB or
    /// config that cannot be loaded), 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::KbUnavailable { .. } => 2,
            CliError::Io { .. } | CliError::Eval(_) | CliError::Runtime(_) => 1,
        }
    }
}
