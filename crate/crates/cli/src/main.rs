//! `tcohom`: classification, operators, cohomology tables, primitive solvers and invariant suites
//! for two-dimensional toroidal groups.

mod commands;
mod config;
mod diagnose;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use commands::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { config::EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            if !out.stderr.is_empty() {
                eprint!("{}", out.stderr);
            }
            ExitCode::from(out.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Failure { hint: Some(h), .. } = &e {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.status())
        }
    }
}
