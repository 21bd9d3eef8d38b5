//! Command-line entry point for the destination-choice pipeline.
//!
//! Exit codes: 0 success (including `--help`/`--version`), 1 usage
//! problems (bad flags or config file), 2 data problems (missing or
//! invalid input files), 3 numerical failures (non-convergence,
//! singular systems, degenerate resamples).

mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;

use clap::Parser;

fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn run(argv: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match config::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

/// Map an error chain to the documented exit codes by its most
/// specific recognizable cause.
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<config::UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<destchoice::Error>() {
            return if e.is_data_error() { 2 } else { 3 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    2
}
