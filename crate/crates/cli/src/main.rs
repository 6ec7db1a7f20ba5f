//! `erskit` — command-line pipelines for recognizability scoring and
//! quality-gated matching over unit-norm embeddings.
//!
//! Every subcommand is a thin orchestration layer over the `erskit` library:
//! it reads the on-disk formats, calls one library entry point, writes the
//! result, and prints a one-line summary. Commands are idempotent and write
//! only under their `--out` / `--out-dir` target; directory-producing
//! commands also drop a `run.config` snapshot recording how the output was
//! produced.
//!
//! Exit codes:
//! * 0 — success (including `--help` / `--version`)
//! * 1 — usage error (bad flags, bad flag values)
//! * 2 — data error (missing/malformed files, infeasible parameters)
//! * 3 — an evaluation hit an unattainable operating point and `--strict`
//!   was set (without `--strict` this is only a warning)

mod commands;

use clap::Parser;
use std::process::ExitCode;

/// Recognizability scoring and quality-gated matching for unit-norm
/// embeddings: discover the unrecognizable-identity centroid, score and
/// enhance embeddings against it, gate verification and search decisions,
/// fuse templates, and evaluate whole pipelines.
#[derive(Parser)]
#[command(name = "erskit", version)]
struct Cli {
    /// Exit with code 3 when any requested operating point is unattainable
    /// (by default this only prints a warning).
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let requested_info =
                matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if requested_info {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    match commands::run(&cli.command) {
        Ok(commands::RunStatus::Clean) => ExitCode::SUCCESS,
        Ok(commands::RunStatus::UnattainablePoints) => {
            if cli.strict {
                eprintln!("error: unattainable operating points escalated by --strict");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
