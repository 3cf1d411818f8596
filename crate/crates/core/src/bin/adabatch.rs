use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    adabatch::cli::main_with(adabatch::cli::Cli::parse())
}
