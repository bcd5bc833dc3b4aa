use std::process::ExitCode;

use clap::Parser;
use iterlab::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iterlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
