//! `pktsched` command-line driver.
//!
//! Exit codes: 0 on success, 1 when a run breaks an invariant or a file
//! cannot be written, 2 for bad flags or configuration.

mod args;
mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Invariant(String),
    Core(pktsched::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_usage() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<pktsched::Error> for CliError {
    fn from(e: pktsched::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pktsched: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn real_main() -> Result<(), CliError> {
    let argv = config::expand(std::env::args_os().collect())?;
    let mut command = Cli::command();
    let matches = match command.try_get_matches_from_mut(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError::Usage("invalid arguments".into()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = command.find_subcommand(name).expect("matched subcommand exists");
    let echo = config::effective(sub, sub_matches);
    match cli.command {
        Command::Gen(c) => commands::gen(c, &echo),
        Command::Run(c) => commands::run(c, &echo),
        Command::Batch(c) => commands::batch(c, &echo),
        Command::Psi(c) => commands::psi(c, &echo),
        Command::Tandem(c) => commands::tandem(c, &echo),
        Command::Buffersize(c) => commands::buffersize(c, &echo),
        Command::Hardinstance(c) => commands::hardinstance(c, &echo),
    }
}
