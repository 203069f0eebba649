use std::process::ExitCode;

use clap::Parser;
use hbf_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match hbf_cli::run(cli.command, &cli.overrides) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code)
        }
    }
}
