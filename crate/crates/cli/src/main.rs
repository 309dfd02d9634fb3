use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = gprg_cli::Cli::parse();
    match gprg_cli::run(cli) {
        Ok(Some(manifest)) => {
            eprintln!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gprg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
