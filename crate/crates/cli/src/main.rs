use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = qlra_cli::Cli::parse();
    match qlra_cli::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
