//! Command-line arguments and the equivalent TOML configuration.
//!
//! Every subcommand option can also be given in a table named after the
//! subcommand; command-line values take precedence. A config file with a
//! top-level `command` key runs without a subcommand on the command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "gsa",
    version,
    about = "Sensitivity analysis of distribution-valued and stochastic codes"
)]
pub struct Cli {
    /// TOML file with default options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Result file (stdout when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Omit the timestamp and wall times so reruns are byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate one index from a design file.
    Estimate(EstimateArgs),
    /// Toy model with an exact or simulated uniform output law.
    Toy(ToyArgs),
    /// Direct analysis of the Gremaud function with U[0,1] inputs.
    Gremaud(GremaudArgs),
    /// Sensitivity to the parameters of the input distributions.
    SecondLevel(SecondLevelArgs),
    /// Recommended approximation size n for a sample size N.
    Calibrate(CalibrateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Toy(_) => "toy",
            Command::Gremaud(_) => "gremaud",
            Command::SecondLevel(_) => "second-level",
            Command::Calibrate(_) => "calibrate",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateArgs {
    /// Design CSV (wide or long layout).
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// pf, ustat or rank (default: rank for x,z designs, pf otherwise).
    #[arg(long)]
    pub method: Option<String>,
    /// sobol, cvm, wball or quantile.
    #[arg(long)]
    pub family: Option<String>,
    /// Wasserstein order of the ball family.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyArgs {
    /// Bernoulli parameters p1 p2 p3.
    #[arg(long, num_args = 3)]
    pub p: Option<Vec<f64>>,
    /// pf, ustat or rank.
    #[arg(long)]
    pub method: Option<String>,
    /// frechet (quantile evaluation) or wball.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sample_size: Option<usize>,
    /// Draws per output law; the exact law is used when absent.
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub approximation_size: Option<usize>,
    /// Replications.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub replications: Option<usize>,
    /// Index sets, e.g. 1 2 3 1,3.
    #[arg(long, num_args = 1..)]
    pub u: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quantile grid size of the exact output law.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Writes the design of the first index set and replication.
    #[arg(long)]
    pub save_design: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GremaudArgs {
    /// pf, ustat or rank.
    #[arg(long)]
    pub method: Option<String>,
    /// cvm or sobol.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sample_size: Option<usize>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub replications: Option<usize>,
    #[arg(long, num_args = 1..)]
    pub u: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Writes the design of the first index set and replication.
    #[arg(long)]
    pub save_design: Option<PathBuf>,
}

/// Input family of a configured second-level problem.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `U[A, B]` with `A ~ U[a_low, a_high]`, `B ~ U[b_low, b_high]`.
    UniformInterval {
        a_low: f64,
        a_high: f64,
        b_low: f64,
        b_high: f64,
    },
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondLevelArgs {
    /// Built-in problem: gremaud.
    #[arg(long)]
    pub model: Option<String>,
    /// tight, wide or b3wide.
    #[arg(long)]
    pub prior: Option<String>,
    /// pf, ustat or rank.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sample_size: Option<usize>,
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub approximation_size: Option<usize>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub replications: Option<usize>,
    #[arg(long, num_args = 1..)]
    pub u: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Wasserstein order of the ball family.
    #[arg(long)]
    pub q: Option<f64>,
    /// Inner code as an external command reading inputs on stdin.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    pub inner_command: Option<Vec<String>>,
    /// Input families (config file only).
    #[arg(skip)]
    pub families: Option<Vec<FamilySpec>>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sample_size: Option<usize>,
    /// uniform, log-concave, gaussian-mixture or generic.
    #[arg(long)]
    pub regime: Option<String>,
    /// Support width (uniform).
    #[arg(long)]
    pub width: Option<f64>,
    /// Scale (log-concave).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Constant of the convergence bound.
    #[arg(long)]
    pub constant: Option<f64>,
    #[arg(long)]
    pub ceiling: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    pub reproducible: Option<bool>,
    pub estimate: Option<EstimateArgs>,
    pub toy: Option<ToyArgs>,
    pub gremaud: Option<GremaudArgs>,
    #[serde(rename = "second-level")]
    pub second_level: Option<SecondLevelArgs>,
    pub calibrate: Option<CalibrateArgs>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// The key named in a serde message such as "unknown field `foo`".
fn quoted_field(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e: toml::de::Error| CliError::Config {
        message: e.message().to_string(),
        line: e.span().map(|s| line_of(&text, s.start)),
        field: quoted_field(e.message()),
    })
}

/// Fills unset fields of `self` from `other`.
pub trait Merge {
    fn merge(self, other: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $t {
            fn merge(self, other: Self) -> Self {
                Self { $($f: self.$f.or(other.$f)),* }
            }
        }
    };
}

merge_fields!(EstimateArgs {
    design,
    method,
    family,
    q,
    budget,
    seed
});
merge_fields!(ToyArgs {
    p,
    method,
    family,
    sample_size,
    approximation_size,
    replications,
    u,
    seed,
    grid,
    budget,
    save_design,
});
merge_fields!(GremaudArgs {
    method,
    family,
    sample_size,
    replications,
    u,
    seed,
    budget,
    save_design
});
merge_fields!(SecondLevelArgs {
    model,
    prior,
    method,
    sample_size,
    approximation_size,
    replications,
    u,
    seed,
    budget,
    q,
    inner_command,
    families,
});
merge_fields!(CalibrateArgs {
    sample_size,
    regime,
    width,
    sigma,
    constant,
    ceiling
});

/// Resolved command with command-line values layered over the config file.
pub fn resolve(command: Option<Command>, config: ConfigFile) -> Result<Command, CliError> {
    let ConfigFile {
        command: named,
        estimate,
        toy,
        gremaud,
        second_level,
        calibrate,
        ..
    } = config;
    let command = match (command, named.as_deref()) {
        (Some(c), Some(n)) if c.name() != n => {
            return Err(CliError::field(
                "command",
                format!("config names command '{n}' but '{}' was given", c.name()),
            ))
        }
        (Some(c), _) => c,
        (None, Some("estimate")) => Command::Estimate(EstimateArgs::default()),
        (None, Some("toy")) => Command::Toy(ToyArgs::default()),
        (None, Some("gremaud")) => Command::Gremaud(GremaudArgs::default()),
        (None, Some("second-level")) => Command::SecondLevel(SecondLevelArgs::default()),
        (None, Some("calibrate")) => Command::Calibrate(CalibrateArgs::default()),
        (None, Some(other)) => return Err(CliError::field("command", format!("unknown command '{other}'"))),
        (None, None) => {
            return Err(CliError::Usage(
                "no command given (use a subcommand or a config file with `command = ...`)".into(),
            ))
        }
    };
    Ok(match command {
        Command::Estimate(a) => Command::Estimate(a.merge(estimate.unwrap_or_default())),
        Command::Toy(a) => Command::Toy(a.merge(toy.unwrap_or_default())),
        Command::Gremaud(a) => Command::Gremaud(a.merge(gremaud.unwrap_or_default())),
        Command::SecondLevel(a) => Command::SecondLevel(a.merge(second_level.unwrap_or_default())),
        Command::Calibrate(a) => Command::Calibrate(a.merge(calibrate.unwrap_or_default())),
    })
}
