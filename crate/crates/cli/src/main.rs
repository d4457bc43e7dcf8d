use std::process::ExitCode;

use clap::Parser;
use classo_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match classo_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
