//! `qexp`: command-line front end for the `qexp-core` library.
//!
//! Exit codes: 0 success, 2 parse error, 3 certificate failure, 4 budget
//! exceeded, 1 anything else.

mod cert;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let Cli { global, mut command } = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors exit 1; 2 is reserved for expression syntax.
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = RunConfig::resolve(global, &mut command).and_then(|cfg| commands::run(&command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(dump) = e.dump() {
                eprintln!("{dump}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
