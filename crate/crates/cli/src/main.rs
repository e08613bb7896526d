use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = almm_cli::Cli::parse();
    match almm_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("almm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
