//! Library half of the `hedge` binary, so tests can drive the subcommands
//! without spawning processes.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod judges;
pub mod output;
pub mod templates;

use args::{Cli, Command};
use commands::Outcome;
use error::CliResult;

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Validate(a) => commands::validate(&a.dataset).map(|(_, o)| o),
        Command::Distort(a) => commands::distort_images(a).map(|(_, o)| o),
        Command::Score(a) => commands::score(a),
        Command::Tune(a) => commands::tune(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Report(a) => commands::report(a),
    }
}
