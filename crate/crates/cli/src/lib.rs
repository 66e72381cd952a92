//! `ptq` command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

mod cli;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use ptq_core::Error;

pub use crate::cli::{Cli, Command};
pub use crate::manifest::{RunManifest, MANIFEST_FILE};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) => EXIT_USAGE,
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_DATA,
    }
}

/// Executes one subcommand, writing its summary to `out`.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), Error> {
    match command {
        Command::Generate(args) => commands::generate(args, out),
        Command::Select(args) => commands::select_cmd(args, out),
        Command::Evaluate(args) => commands::evaluate(args, out),
        Command::Abtest(args) => commands::abtest(args, out),
        Command::Audit(args) => commands::audit(args, out),
    }
}

/// Runs the command line in `args` (program name first).
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = if cli.quiet {
        execute(&cli.command, &mut std::io::sink())
    } else {
        execute(&cli.command, &mut std::io::stdout().lock())
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
