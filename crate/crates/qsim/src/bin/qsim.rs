use std::process::ExitCode;

use clap::Parser;
use qsim::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
