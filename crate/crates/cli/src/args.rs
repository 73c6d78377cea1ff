use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mdraw",
    version,
    about = "Monte Carlo estimators for drawdowns of meander and Bessel paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; every replicate stream is derived from it.
    #[arg(long, global = true, env = "MDRAW_SEED", default_value_t = 1)]
    pub seed: u64,

    /// Number of Monte Carlo replicates.
    #[arg(long, global = true)]
    pub paths: Option<usize>,

    /// Grid steps (overrides the per-estimator default).
    #[arg(long, global = true)]
    pub steps: Option<usize>,

    /// Grid horizon (overrides the per-estimator default).
    #[arg(long, global = true)]
    pub horizon: Option<f64>,

    /// Comma-separated survival levels or area thresholds.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Option<Vec<f64>>,

    /// Output file; `-` writes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Directory for default-named output files when `--out` is absent.
    #[arg(long, global = true, env = "MDRAW_OUT", hide = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Exit with status 2 unless the estimate passes its target gate.
    #[arg(long, global = true)]
    pub gate: bool,

    /// Exponent p in the bias model `c * h^p` used for extrapolation.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub bias_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "ndjson",
            Format::Csv => "csv",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit sample paths in long format.
    Sample {
        #[arg(value_enum)]
        process: ProcessName,
    },
    /// Run one estimator and write its report.
    Estimate {
        #[arg(value_enum)]
        which: EstimatorName,
    },
    /// Run the seven gated identities and write a summary table.
    Verify,
    /// Tabulate the subdivision product against its limit for doubling n.
    Lehoczky {
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
    },
    /// Survival curve of U at the drawdown time, with its KS distance.
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessName {
    Bm,
    Bes3,
    Besq4,
    Meander,
    MeanderImhof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorName {
    InvDrawdownMeander,
    InvDrawdownImhof,
    #[value(name = "tau1-besq4")]
    Tau1Besq4,
    ValueAtTau,
    Wald,
    #[value(name = "tail-A")]
    TailA,
}

impl ProcessName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessName::Bm => "bm",
            ProcessName::Bes3 => "bes3",
            ProcessName::Besq4 => "besq4",
            ProcessName::Meander => "meander",
            ProcessName::MeanderImhof => "meander-imhof",
        }
    }
}

impl EstimatorName {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorName::InvDrawdownMeander => "inv-drawdown-meander",
            EstimatorName::InvDrawdownImhof => "inv-drawdown-imhof",
            EstimatorName::Tau1Besq4 => "tau1-besq4",
            EstimatorName::ValueAtTau => "value-at-tau",
            EstimatorName::Wald => "wald",
            EstimatorName::TailA => "tail-A",
        }
    }
}
