use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const DEFAULT_HORIZON: f64 = 1000.0;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_MARGIN: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HISTORIES: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "ddestab", version, about = "Stability checks and simulation for linear delay equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stability check and print a JSON report.
    Check(CheckArgs),
    /// Simulate random (and file-given) histories, write CSV and a classification.
    Simulate(SimulateArgs),
    /// Compute one fundamental slice X(., s), write CSV and a decay fit.
    Fundamental(FundamentalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Equation file (JSON).
    pub equation: PathBuf,
    /// Horizon H.
    #[arg(long, env = "DDESTAB_HORIZON", default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    /// Override a named parameter, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Output path (file for `check`, directory otherwise).
    #[arg(long, env = "DDESTAB_OUT")]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn overrides(&self) -> BTreeMap<String, f64> {
        self.params.iter().cloned().collect()
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid step of the limsup/liminf estimates.
    #[arg(long, env = "DDESTAB_STEP", default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Margin on strict inequalities.
    #[arg(long, env = "DDESTAB_MARGIN", default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Window length R of the sliding-integral conditions.
    #[arg(long, env = "DDESTAB_WINDOW")]
    pub window: Option<f64>,
    /// Start of the tail window (default: 20% into the horizon).
    #[arg(long)]
    pub window_start: Option<f64>,
    /// Dominant terms, 0-based, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub index_set: Option<Vec<usize>>,
    /// Comparison function r(t) for the shifted test.
    #[arg(long)]
    pub r: Option<String>,
    /// Treat divergence of the coefficient-sum integral as known.
    #[arg(long)]
    pub assume_divergent: bool,
    /// Treat the coefficient sum as nonzero almost everywhere.
    #[arg(long)]
    pub assume_nonvanishing: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of random histories.
    #[arg(long, default_value_t = DEFAULT_HISTORIES)]
    pub histories: usize,
    #[arg(long, env = "DDESTAB_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Largest solver step.
    #[arg(long, env = "DDESTAB_STEP")]
    pub step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FundamentalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial time s.
    #[arg(short, long, default_value_t = 0.0)]
    pub s: f64,
    /// Largest solver step.
    #[arg(long, env = "DDESTAB_STEP")]
    pub step: Option<f64>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}
