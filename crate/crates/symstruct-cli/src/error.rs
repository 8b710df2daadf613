use std::path::PathBuf;

use symstruct::SymError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const PHYSICS: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed JSON or a schema error, with the position reported by the parser.
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    /// Well-formed config whose contents are unusable.
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Library(#[from] SymError),

    /// The command ran to completion but a physical check failed.
    #[error("physics check failed: {0}")]
    PhysicsFail(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config { .. } | CliError::Usage(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::PhysicsFail(_) => exit::PHYSICS,
            CliError::Library(e) if e.is_physics() => exit::PHYSICS,
            CliError::Library(SymError::Numerical(_)) => exit::NUMERICAL,
            CliError::Library(_) => exit::CONFIG,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
