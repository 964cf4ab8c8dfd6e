use std::process::ExitCode;

use clap::Parser;
use hedge_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match hedge_cli::run(&cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            if let Some(dir) = outcome.dir {
                println!("{}", dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
