//! Command-line front end: argument and config parsing, design files,
//! result tables and the subcommands.

pub mod args;
pub mod commands;
pub mod design_io;
pub mod error;
pub mod report;

use std::io::Write;

use args::{load_config, resolve, Cli, Command, ConfigFile};
use error::CliError;
use report::{render, Format};

/// Runs a parsed command line to completion.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let format: Format = cli
        .format
        .as_deref()
        .or(config.format.as_deref())
        .unwrap_or("csv")
        .parse()?;
    let output = cli.output.clone().or_else(|| config.output.clone());
    let reproducible = cli.reproducible || config.reproducible.unwrap_or(false);
    let mut table = match resolve(cli.command, config)? {
        Command::Estimate(a) => commands::estimate(a)?,
        Command::Toy(a) => commands::toy(a)?,
        Command::Gremaud(a) => commands::gremaud(a)?,
        Command::SecondLevel(a) => commands::second_level(a)?,
        Command::Calibrate(a) => commands::calibrate(a)?,
    };
    if reproducible {
        table.strip_timing();
    }
    let bytes = render(&table, format, reproducible)?;
    match output {
        Some(path) => std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| CliError::io("<stdout>".as_ref(), e)),
    }
}
