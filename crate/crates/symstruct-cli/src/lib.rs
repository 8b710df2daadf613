//! Command-line driver for `symstruct`: reads a JSON experiment config,
//! runs one of the pipelines and writes CSV/JSON artifacts.
//!
//! Every output embeds the SHA-256 of the config and the tolerances used;
//! floats are written as `%.17g`, so identical inputs give identical bytes.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use commands::{run, Command, Outcome};
pub use error::{exit, CliError, CliResult};

/// Thread count from `--threads`, else `SYMSTRUCT_THREADS`, else rayon's default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return if n == 0 { Err(CliError::Usage("--threads must be ≥ 1".into())) } else { Ok(Some(n)) };
    }
    match std::env::var("SYMSTRUCT_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("SYMSTRUCT_THREADS={s:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}
