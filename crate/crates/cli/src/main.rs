mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Cmd};
use config::FileConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit status 1.
    Usage(String),
    /// The run itself failed; exit status 2.
    Runtime(String),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Cmd::GenData(a) => commands::gen_data(a, &file),
        Cmd::Plan(a) => commands::plan(a, &file),
        Cmd::Fly(a) => commands::fly(a, &file),
        Cmd::Evaluate(a) => commands::evaluate_cmd(a, &file),
        Cmd::Render(a) => commands::render(a, &file),
        Cmd::Stats(a) => commands::stats(a),
        Cmd::MockPolicy(a) => commands::mock_policy(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
