use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = gridtrade_cli::Cli::parse();
    match gridtrade_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
