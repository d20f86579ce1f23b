//! `intgarch`: simulate, fit, forecast and evaluate interval-valued GARCH
//! models from the command line.
//!
//! Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 non-convergence.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use intgarch::{InitMode, ModelOrders};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "intgarch", version, about = "Interval-valued GARCH toolkit", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Config file: a JSON object or `key = value` lines. Keys are flag
    /// names; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Format of the tables written by fit, backtest and table1.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for parallel replications.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate an interval-valued return series.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Fit a model by maximum likelihood.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Multi-step forecasts of h and the conditional variance.
    #[command(args_override_self = true)]
    Forecast(ForecastArgs),
    /// Sample ACF, with the model ACF alongside when a model is given.
    #[command(args_override_self = true)]
    Acf(AcfArgs),
    /// Clean quotes, sample a price grid, and build interval returns and RV.
    #[command(args_override_self = true)]
    Prepare(PrepareArgs),
    /// Rolling out-of-sample comparison against GARCH(1,1).
    #[command(args_override_self = true)]
    Backtest(BacktestArgs),
    /// Monte Carlo study of the estimator under the four reference designs.
    #[command(args_override_self = true)]
    Table1(Table1Args),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Forecast(_) => "forecast",
            Command::Acf(_) => "acf",
            Command::Prepare(_) => "prepare",
            Command::Backtest(_) => "backtest",
            Command::Table1(_) => "table1",
        }
    }
}

fn parse_orders(s: &str) -> Result<ModelOrders, String> {
    s.parse().map_err(|e: intgarch::Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitMode, String> {
    s.parse().map_err(|e: intgarch::Error| e.to_string())
}

/// Where model parameters come from: a JSON file, a reference design, or
/// inline values.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelSource {
    /// Model JSON: a fitted model written by `fit`, or
    /// {"k", "mu", "alpha": [..], "beta": [..], "gamma": [..]}.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Reference design I, II, III or IV.
    #[arg(long)]
    pub design: Option<String>,
    /// Gamma shape of the radius shocks.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Comma-separated alpha_1..alpha_p.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Comma-separated beta_1..beta_q.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Comma-separated gamma_1..gamma_w (empty for Int-ARCH).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Number of observations kept.
    #[arg(long, visible_alias = "T")]
    pub length: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Pre-sample h: zero or mean.
    #[arg(long, default_value = "zero", value_parser = parse_init)]
    pub init: InitMode,
    /// RNG seed; generated and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Interval series CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write the h path and conditional variance.
    #[arg(long, value_name = "PATH")]
    pub h_out: Option<PathBuf>,
    /// Refuse parameters with sum of mu_i >= 1.
    #[arg(long)]
    pub require_stationary: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Interval series CSV.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Lag orders p,q,w.
    #[arg(long, default_value = "1,1,1", value_parser = parse_orders)]
    pub orders: ModelOrders,
    /// Pre-sample h for the likelihood: zero or mean.
    #[arg(long, default_value = "mean", value_parser = parse_init)]
    pub init: InitMode,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Convergence tolerance on the max-norm of the free gradient.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Differentiate only the direct terms of the h recursion.
    #[arg(long)]
    pub direct_derivatives: bool,
    /// Fitted model JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Fit summary (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ForecastArgs {
    /// Model JSON (see `simulate --model`).
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Interval series CSV the forecasts condition on.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub horizon: usize,
    /// Forecast origin (0-based row); defaults to the last row.
    #[arg(long)]
    pub origin: Option<usize>,
    /// Pre-sample h for the filter; defaults to the model file's mode.
    #[arg(long, value_parser = parse_init)]
    pub init: Option<InitMode>,
    /// Rolling forecasts from every origin after the training window,
    /// refitting on the expanding window (the model supplies the orders).
    #[arg(long, requires = "train_len")]
    pub rolling: bool,
    #[arg(long)]
    pub train_len: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub refit_every: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AcfArgs {
    /// Interval series CSV.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    /// Model JSON; adds the theoretical ACF column ((1,1,1) models).
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrepareArgs {
    /// Quote CSV: timestamp,bid,ask[,price].
    #[arg(long, value_name = "PATH")]
    pub ticks: PathBuf,
    /// Session open, HH:MM[:SS].
    #[arg(long, default_value = "09:30")]
    pub session_start: String,
    /// Session close, HH:MM[:SS].
    #[arg(long, default_value = "16:00")]
    pub session_end: String,
    /// Grid spacing in seconds.
    #[arg(long, default_value_t = 300)]
    pub spacing: i64,
    /// Interval returns CSV (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Daily bars CSV (range, RV, close).
    #[arg(long, value_name = "PATH")]
    pub bars_out: Option<PathBuf>,
    /// Cleaned quotes CSV.
    #[arg(long, value_name = "PATH")]
    pub clean_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BacktestArgs {
    /// Daily bars CSV with rv and close_log columns (from `prepare`).
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic")]
    pub bars: Option<PathBuf>,
    /// Use a simulated world instead of data (model from the source
    /// flags, design I by default).
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub source: ModelSource,
    /// Length of the synthetic world.
    #[arg(long, visible_alias = "T", default_value_t = 1511)]
    pub length: usize,
    /// Standard deviation of the multiplicative proxy noise.
    #[arg(long, default_value_t = 0.2)]
    pub noise_sd: f64,
    /// RNG seed for --synthetic; generated and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "1,1,1", value_parser = parse_orders)]
    pub orders: ModelOrders,
    #[arg(long, default_value = "mean", value_parser = parse_init)]
    pub init: InitMode,
    /// Training observations; defaults to all but --test-len.
    #[arg(long)]
    pub train_len: Option<usize>,
    #[arg(long, default_value_t = 252)]
    pub test_len: usize,
    /// Refit every N forecast origins (1 = daily).
    #[arg(long, default_value_t = 1)]
    pub refit_every: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
    pub horizons: Vec<usize>,
    /// Asset label in the report.
    #[arg(long)]
    pub asset: Option<String>,
    /// Enter the proxy linearly in QLIKE and HMSE.
    #[arg(long)]
    pub proxy_linear: bool,
    /// Square each HMSE term.
    #[arg(long)]
    pub hmse_squared: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Table1Args {
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, visible_alias = "T", default_value_t = 1000)]
    pub length: usize,
    /// RNG seed; generated and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Designs to run.
    #[arg(long, value_delimiter = ',', default_value = "I,II,III,IV")]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Pre-sample h of the simulated paths: zero or mean.
    #[arg(long, default_value = "zero", value_parser = parse_init)]
    pub sim_init: InitMode,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_args(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let Some(path) = config::find_config(&args) else {
        return Cli::try_parse_from(args);
    };
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(sub) = args.iter().skip(1).find(|a| names.iter().any(|n| *a == n.as_str())) else {
        return Cli::try_parse_from(args);
    };
    let sub = sub.to_string_lossy().into_owned();
    let flags = config::read_config(std::path::Path::new(&path)).and_then(|e| config::to_flags(&e)).map_err(|e| {
        Cli::command().error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
    })?;
    Cli::try_parse_from(config::splice(&args, &sub, flags))
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let f = commands::classify(&e);
            eprintln!("error[{}]: {}", f.kind(), commands::describe(&e));
            ExitCode::from(f.code())
        }
    }
}
