mod args;
mod commands;
mod exit;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use morag_core::config::EngineConfig;

use args::{Cli, Command};
use exit::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = EngineConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.metrics.seed = s;
        cfg.train.seed = s;
    }
    match &cli.command {
        Command::BuildDb(a) => commands::build_db(a),
        Command::Describe(a) => commands::describe(a, &cfg),
        Command::Retrieve(a) => commands::retrieve(a, &cfg),
        Command::Compose(a) => commands::compose(a, &cfg),
        Command::Eval(a) => commands::eval(a, &cfg),
        Command::TrainToy(a) => commands::train_toy(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
