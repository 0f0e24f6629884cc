//! Command-line front end for `ionsps`.
//!
//! Every subcommand reads an optional TOML experiment description, writes
//! fixed-format CSV files into the output directory and returns a short
//! text report. Results depend only on the configuration and the seed, never
//! on the worker count.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ionsps::par::Exec;

mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ionsps", version, about = "Trapped-ion single-photon source simulation and analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment description (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory; overrides `output.dir` (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state fluorescence versus repump detuning -> scan.csv.
    Scan(ScanArgs),
    /// Single-photon arrival-time density and quantum-beat report -> wavepacket.csv.
    Wavepacket,
    /// Fit the dark-resonance model to a measured scan -> fit.csv, fit_curve.csv.
    Fit(FitArgs),
    /// Monte-Carlo time tags of the detection chain -> tags.ttag, tags.toml.
    Simulate(SimulateArgs),
    /// Click statistics and g2 histogram of a tag file -> stats.csv, g2.csv.
    Analyze(AnalyzeArgs),
    /// Non-Gaussianity and non-classicality verdict -> witness.csv, threshold.csv.
    Witness(WitnessArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// First repump detuning [Hz]; overrides `scan.start_hz`.
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    /// Last repump detuning [Hz]; overrides `scan.stop_hz`.
    #[arg(long, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    /// Number of grid points; overrides `scan.points`.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Measured scan: `detuning_hz,rate_cps[,sigma_cps]` rows.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// Free parameters, comma separated; overrides `fit.free`.
    #[arg(long, value_delimiter = ',')]
    pub free: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Only tally the windows (counts.csv) instead of writing every tag.
    #[arg(long)]
    pub counts_only: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tag file, TTAG binary or `.csv` with `channel,timestamp_ps` rows.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Detection window after each trigger [s].
    #[arg(long)]
    pub window: f64,
    /// Trigger period [s]; enables the pulsed g2(0) estimate.
    #[arg(long)]
    pub period: Option<f64>,
    /// Histogram range start [s] (default: -3.5 periods, or -1 us).
    #[arg(long, allow_negative_numbers = true)]
    pub tau_min: Option<f64>,
    /// Histogram range end [s] (default: +3.5 periods, or +1 us).
    #[arg(long, allow_negative_numbers = true)]
    pub tau_max: Option<f64>,
    /// Histogram bin width [s].
    #[arg(long, default_value_t = 1e-9)]
    pub bin: f64,
    /// Keep only tags this long after each trigger for the histogram [s].
    #[arg(long, requires = "gate_length")]
    pub gate_offset: Option<f64>,
    #[arg(long, requires = "gate_offset")]
    pub gate_length: Option<f64>,
    /// Dark count rate of detector A [counts/s]; with --dark-b enables the
    /// background-corrected alpha limit.
    #[arg(long, requires = "dark_b")]
    pub dark_a: Option<f64>,
    #[arg(long, requires = "dark_a")]
    pub dark_b: Option<f64>,
    /// One-sigma uncertainty of the dark rates [counts/s].
    #[arg(long, default_value_t = 0.0)]
    pub dark_sigma: f64,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// stats.csv written by `analyze`.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["triggers", "singles", "coincidences"])]
    pub stats: Option<PathBuf>,
    #[arg(long, requires_all = ["singles", "coincidences"])]
    pub triggers: Option<u64>,
    #[arg(long)]
    pub singles: Option<u64>,
    #[arg(long)]
    pub coincidences: Option<u64>,
    /// Threshold curve grid in the squeezed-state variance V.
    #[arg(long, default_value_t = 0.01)]
    pub v_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v_max: f64,
    #[arg(long, default_value_t = 100)]
    pub v_points: usize,
}

/// Shared state of one invocation.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub exec: Exec,
}

impl Context {
    pub fn from_args(g: &GlobalArgs) -> CliResult<Self> {
        let config = match &g.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let out = config.output_dir(g.out.as_deref());
        Ok(Context { config, seed: g.seed, out, exec: Exec::from_workers(g.workers) })
    }
}

/// Runs one parsed command line and returns its report.
pub fn run(cli: &Cli) -> CliResult<String> {
    let ctx = Context::from_args(&cli.global)?;
    match &cli.command {
        Command::Scan(a) => commands::scan(&ctx, a),
        Command::Wavepacket => commands::wavepacket(&ctx),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Witness(a) => commands::witness(&ctx, a),
    }
}
