//! Command-line surface.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use classo::simulate::DesignKind;
use classo::{AlphaMode, ClassoConfig, Method, Penalty};
use serde::Serialize;

use crate::table::ResponseColumn;

#[derive(Debug, Parser)]
#[command(
    name = "classo",
    version,
    about = "Constrained Lasso inference for a few coefficients in a high-dimensional linear model",
    after_help = "Set CLASSO_THREADS to cap the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimates, confidence intervals and p-values for selected predictors.
    Fit(FitArgs),
    /// Test every predictor and control the family-wise error with Holm's step-down.
    Infer(InferArgs),
    /// Monte-Carlo coverage, RMSE, power and FWER on a Gaussian design.
    Simulate(SimulateArgs),
}

/// `auto` for the scaled-Lasso rule or an explicit positive value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LambdaArg {
    #[serde(serialize_with = "auto_str")]
    Auto,
    Value(f64),
}

fn auto_str<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("auto")
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(LambdaArg::Value(v)),
            _ => Err(format!("expected `auto` or a positive number, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Numeric CSV; a non-numeric first row is read as a header.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column, by 1-based position or header name.
    #[arg(long, default_value = "1")]
    pub response_col: ResponseColumn,
    /// Subtract column means from the response and the predictors.
    #[arg(long)]
    pub center: bool,
    /// Rescale each predictor to `‖x‖²/n = 1` (after centering, if requested).
    #[arg(long)]
    pub scale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Outcome penalty: `auto` (scaled Lasso) or a value. An explicit value
    /// replaces only the penalty; the noise level is still estimated.
    #[arg(long, default_value = "auto")]
    pub lambda: LambdaArg,
    /// Maximum number of alternations.
    #[arg(long = "iters", default_value_t = 10)]
    pub iterations: usize,
    /// Penalty schedule constant c.
    #[arg(long, default_value_t = 0.5)]
    pub schedule_c: f64,
    /// Use α ≡ 0, which reduces the iteration to the un-penalized Lasso.
    #[arg(long)]
    pub alpha_zero: bool,
}

impl ModelArgs {
    pub fn config(&self) -> ClassoConfig {
        ClassoConfig {
            penalty: match self.lambda {
                LambdaArg::Auto => Penalty::Auto,
                LambdaArg::Value(v) => Penalty::Fixed(v),
            },
            iterations: self.iterations,
            schedule_c: self.schedule_c,
            alpha: if self.alpha_zero {
                AlphaMode::Zero
            } else {
                ClassoConfig::default().alpha
            },
            ..ClassoConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// 1-based predictor positions (response excluded), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub targets: Vec<usize>,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Methods to report, comma separated: classo, up_lasso, ds_lasso.
    #[arg(long, value_delimiter = ',', default_value = "classo")]
    pub methods: Vec<Method>,
    /// Output JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Family-wise error level of the Holm procedure.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value = "classo")]
    pub method: Method,
    /// Output JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the sorted p-value table as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// toeplitz, equicorr or identity.
    #[arg(long, default_value = "toeplitz")]
    pub design: DesignKind,
    /// Correlation parameter; 0.9 for toeplitz and 0.8 for equicorr when omitted.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Base seed of every random stream. Required.
    #[arg(long)]
    pub seed: u64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "classo,up_lasso,ds_lasso"
    )]
    pub methods: Vec<Method>,
    /// 1-based coordinates whose intervals are tracked.
    #[arg(long, value_delimiter = ',', default_value = "3,7")]
    pub targets: Vec<usize>,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Test every coordinate with Holm's procedure and report power and FWER.
    #[arg(long)]
    pub holm: bool,
    /// Family-wise error level used with --holm.
    #[arg(long, default_value_t = 0.05)]
    pub fwer_level: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Report JSON. The per-replicate CSV goes next to it unless --replicates is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replicate CSV.
    #[arg(long)]
    pub replicates: Option<PathBuf>,
}
