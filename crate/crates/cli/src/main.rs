//! `mergelab`: builds the merging instance, verifies its properties, runs the
//! protocols and the zero-cost search, and prints JSON reports.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage errors.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use mergelab::states::GammaParams;

use args::{Cli, Command};
use commands::{execute, Failure};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let gammas = GammaParams::new(cli.global.gamma1, cli.global.gamma2);
    let outcome = match execute(&cli.command, gammas) {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let pretty = !matches!(cli.command, Command::Run { trace: true, .. });
    let written = match &outcome.lines {
        Some(lines) => lines
            .iter()
            .try_for_each(|l| output::emit(l, false, None))
            .and_then(|_| cli.global.json.as_deref().map_or(Ok(()), |p| output::write_file(&outcome.report, p))),
        None => output::emit(&outcome.report, pretty, cli.global.json.as_deref()),
    };
    match written {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            return ExitCode::from(1);
        }
        Ok(()) => {}
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        if let Some(failed) = outcome.report.get("failed").and_then(|f| f.as_array()) {
            for f in failed {
                eprintln!("verification failed: {}", f.as_str().unwrap_or_default());
            }
        }
        ExitCode::from(1)
    }
}
