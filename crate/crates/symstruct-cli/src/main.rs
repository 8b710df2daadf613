use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symstruct_cli::{exit, run, thread_count, CliError, Command};

#[derive(Parser)]
#[command(name = "symstruct", version, about = "Time-local generators of phase-covariant open quantum dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; falls back to SYMSTRUCT_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Jaynes–Cummings Bloch functions and rates on a time grid.
    JcRates(Common),
    /// Truncated-series d⟨σz⟩/dt against the exact spin-star result.
    SpinstarCompare(Common),
    /// Kinetic coefficients of a model plus a validator report.
    Extract(Common),
    /// Validator suite on artifacts written by `extract`.
    Validate(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { exit::OK as u8 });
        }
    };
    let (command, common) = match cli.command {
        Cmd::JcRates(c) => (Command::JcRates, c),
        Cmd::SpinstarCompare(c) => (Command::SpinstarCompare, c),
        Cmd::Extract(c) => (Command::Extract, c),
        Cmd::Validate(c) => (Command::Validate, c),
    };
    let result = thread_count(common.threads).and_then(|n| {
        if let Some(n) = n {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        }
        run(command, &common.config, &common.out)
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for m in &outcome.messages {
                print!("{m}{}", if m.ends_with('\n') { "" } else { "\n" });
            }
            if let Some(f) = &outcome.physics_failure {
                eprintln!("error: {f}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
