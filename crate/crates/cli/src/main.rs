//! `gpnet` — command-line workflows for Generalized Poisson dynamic
//! network models: simulate synthetic networks, fit the three dynamic
//! specifications by MCMC, diagnose chains, score predictions, and emit
//! theoretical property tables.

mod commands;
mod config;
mod formats;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gpnet",
    version,
    about = "Generalized Poisson dynamic network models: simulation, MCMC fitting, and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic temporal network and its ground truth.
    Simulate(SimulateArgs),
    /// Fit a model by Metropolis-within-Gibbs sampling.
    Fit(FitArgs),
    /// Summarize a fitted chain: posterior table, ESS, Geweke, DIC.
    Diagnose(DiagnoseArgs),
    /// Posterior predictive strength bands, imputation, and metrics.
    Predict(PredictArgs),
    /// Theoretical property tables: strength law, sensitivity curves,
    /// and the spectral-radius concentration experiment.
    Properties(PropertiesArgs),
    /// Per-edge dispersion diagnostics over two sub-periods.
    Dispersion(DispersionArgs),
}

/// Model-structure and prior options shared by fit, diagnose, and predict.
#[derive(Args, Debug, Clone)]
pub struct SpecOpts {
    /// Model kind: m1 (latent factor), m2 (autoregressive), m3 (latent space).
    #[arg(long)]
    pub model: Option<String>,
    /// Autoregressive lag order (m2).
    #[arg(long)]
    pub lags: Option<usize>,
    /// Latent space dimension (m3).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Prior variance of the node effects.
    #[arg(long = "sigma-alpha2")]
    pub sigma_alpha2: Option<f64>,
    /// Prior mean of the dispersion parameter zeta.
    #[arg(long = "mu-zeta")]
    pub mu_zeta: Option<f64>,
    /// Prior variance of zeta.
    #[arg(long = "sigma-zeta2")]
    pub sigma_zeta2: Option<f64>,
    /// Inverse-gamma shape for the factor innovation variance (m1/m3).
    #[arg(long = "ig-a")]
    pub ig_a: Option<f64>,
    /// Inverse-gamma rate for the factor innovation variance (m1/m3).
    #[arg(long = "ig-b")]
    pub ig_b: Option<f64>,
    /// Prior variance of the first factor value (m1/m3).
    #[arg(long = "f0-var")]
    pub f0_var: Option<f64>,
    /// Prior variance of the autoregressive coefficients (m2).
    #[arg(long = "sigma-delta2")]
    pub sigma_delta2: Option<f64>,
    /// Latent coordinate step variance (m3).
    #[arg(long = "sigma-x2")]
    pub sigma_x2: Option<f64>,
    /// Comma-separated pre-sample log regressors (m2).
    #[arg(long)]
    pub presample: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model kind: m1, m2, or m3.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub times: Option<usize>,
    /// True dispersion parameter.
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long = "mu-alpha")]
    pub mu_alpha: Option<f64>,
    #[arg(long = "sigma-alpha2")]
    pub sigma_alpha2: Option<f64>,
    #[arg(long = "sigma-eps2")]
    pub sigma_eps2: Option<f64>,
    #[arg(long = "f0-var")]
    pub f0_var: Option<f64>,
    /// Comma-separated true autoregressive coefficients (m2).
    #[arg(long)]
    pub delta: Option<String>,
    /// Comma-separated pre-sample log regressors (m2).
    #[arg(long)]
    pub presample: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "sigma-x2")]
    pub sigma_x2: Option<f64>,
    /// Mask this many random entries of the last slice (imputation protocol).
    #[arg(long = "mask-count")]
    pub mask_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key=value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub spec: SpecOpts,
    /// Edge-list data file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Edge-weight likelihood: gp or poisson.
    #[arg(long)]
    pub likelihood: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of independent chains (seeds increment per chain).
    #[arg(long)]
    pub chains: Option<usize>,
    /// Disable burn-in step-size adaptation.
    #[arg(long = "no-adapt", default_value_t = false)]
    pub no_adapt: bool,
    #[arg(long = "step-alpha")]
    pub step_alpha: Option<f64>,
    #[arg(long = "step-delta")]
    pub step_delta: Option<f64>,
    #[arg(long = "step-f")]
    pub step_f: Option<f64>,
    #[arg(long = "step-zeta")]
    pub step_zeta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub spec: SpecOpts,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Chain CSV produced by fit.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub spec: SpecOpts,
    /// Edge-list data (masked entries become imputation targets).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Unmasked edge list holding the realized values of the targets.
    #[arg(long = "truth-data")]
    pub truth_data: Option<PathBuf>,
    /// Experiment label for the metrics row.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PropertiesArgs {
    /// Comma-separated edge intensities for the total-strength law.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Dispersion parameter for the total-strength law.
    #[arg(long = "theta-law")]
    pub theta_law: Option<f64>,
    /// Node counts for the concentration experiment.
    #[arg(long = "conc-nodes")]
    pub conc_nodes: Option<String>,
    /// Dispersion values for the concentration experiment.
    #[arg(long = "conc-thetas")]
    pub conc_thetas: Option<String>,
    /// Replications per concentration configuration.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DispersionArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// 1-based first time of the second sub-period.
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Fit(args) => commands::fit(args),
        Command::Diagnose(args) => commands::diagnose(args),
        Command::Predict(args) => commands::predict(args),
        Command::Properties(args) => commands::properties(args),
        Command::Dispersion(args) => commands::dispersion(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Machine-readable error record on stderr.
            let record = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
