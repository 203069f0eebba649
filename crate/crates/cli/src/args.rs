use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hbf", version, about = "Hybrid precoding with one-bit DACs: convergence and rate experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Trace the quantization-covariance fixed point of the initial iteration.
    Converge,
    /// Sweep the achievable rate over SNR for every selected scheme.
    Rates,
    /// Run the built-in property suite and print a pass/fail table.
    Validate,
}

/// Flags override the config file, which overrides the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// RF-chain counts, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_name = "N,...")]
    pub nrf: Option<Vec<usize>>,
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "DB")]
    pub snr_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true, value_name = "DB")]
    pub snr_max: Option<f64>,
    #[arg(long, global = true, value_name = "DB")]
    pub snr_step: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of alternating-optimization iterations.
    #[arg(long = "iters", global = true, value_name = "K")]
    pub iterations: Option<usize>,
    /// Skip the RF redesign scheme (fixed-RF ablation only).
    #[arg(long, global = true)]
    pub fixed_rf: bool,
    /// Schemes to run, comma separated: full_digital, hybrid_fixed_rf, hybrid_redesign.
    #[arg(long, global = true, value_delimiter = ',', value_name = "NAME,...")]
    pub schemes: Option<Vec<String>>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
    /// Run only validation checks whose `group::name` contains this text.
    #[arg(long, global = true)]
    pub filter: Option<String>,
}
