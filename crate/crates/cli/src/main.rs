use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = causal_ts_cli::Cli::parse();
    match causal_ts_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
