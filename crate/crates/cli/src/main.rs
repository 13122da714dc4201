use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cns_cli::Cli::parse();
    match cns_cli::run(cli) {
        Ok(()) => ExitCode::from(cns_cli::error::EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
