//! `ddestab` command line: `check`, `simulate`, `fundamental`.
//!
//! Exit codes: 0 success, 1 usage, I/O, parse or solver error, 2 the equation
//! fails model validation (the report is still written).

use std::process::ExitCode;

use clap::Parser;

mod cmd;
mod config;

use config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cmd::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
