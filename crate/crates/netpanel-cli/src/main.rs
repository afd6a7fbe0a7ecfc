//! Batch front door for the panel modeling toolkit: estimate, simulate,
//! gof, audit and replicate-flaw subcommands over plain-text network files
//! and JSON model specs.
//!
//! Exit codes: 0 success, 2 validation error, 3 leakage findings,
//! 4 non-convergence.

mod commands;
mod data;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_LEAKAGE: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Parser)]
#[command(
    name = "netpanel",
    version,
    about = "Longitudinal network panel models: TERGM/SAOM estimation, \
             simulation, out-of-sample goodness of fit and leakage auditing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a model to a panel and write estimates.json
    Estimate(EstimateArgs),
    /// Simulate networks from a fitted model conditional on the last wave
    Simulate(SimulateArgs),
    /// Hold out the final wave, fit on the rest, and score predictions
    Gof(GofArgs),
    /// Classify model terms for dependent-wave information leakage
    Audit(AuditArgs),
    /// Fit the flawed and corrected specifications side by side
    ReplicateFlaw(ReplicateFlawArgs),
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Adjacency matrix files, one per wave, in temporal order
    #[arg(long, num_args = 1.., required = true)]
    pub waves: Vec<PathBuf>,
    /// Covariate files: CSV with header (nodal) or square matrix (dyadic)
    #[arg(long, num_args = 1..)]
    pub covariates: Vec<PathBuf>,
}

#[derive(Args, Clone)]
pub struct McmcArgs {
    /// Proposals discarded before retaining draws
    #[arg(long, default_value_t = 20_000)]
    pub burnin: usize,
    /// Proposals between retained draws
    #[arg(long, default_value_t = 500)]
    pub thin: usize,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model spec JSON file
    #[arg(long)]
    pub spec: PathBuf,
    /// RNG seed (mandatory for reproducibility)
    #[arg(long)]
    pub seed: u64,
    /// Model family
    #[arg(long, default_value = "tergm", value_parser = ["tergm", "saom"])]
    pub model: String,
    /// Simulated sample size per estimation iteration
    #[arg(long, default_value_t = 500)]
    pub nsim: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub spec: PathBuf,
    /// estimates.json from a previous `estimate` run (supplies coefficients)
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Number of networks to simulate
    #[arg(long, default_value_t = 10)]
    pub nsim: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GofArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "tergm", value_parser = ["tergm", "saom"])]
    pub model: String,
    /// Number of held-out-wave simulations to score
    #[arg(long, default_value_t = 100)]
    pub nsim: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Proceed despite terms bound to held-out-wave information
    #[arg(long)]
    pub allow_leakage: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Optional panel for the dynamic perturbation probe
    #[arg(long, num_args = 1..)]
    pub waves: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub covariates: Vec<PathBuf>,
    /// estimates.json for the probe's fitted coefficients
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub nsim: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Report findings but exit 0 anyway
    #[arg(long)]
    pub allow_leakage: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReplicateFlawArgs {
    /// Optional observed panel; a synthetic one is generated when absent
    #[arg(long, num_args = 1..)]
    pub waves: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub covariates: Vec<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Nodes in the synthetic panel
    #[arg(long, default_value_t = 26)]
    pub nodes: usize,
    /// Waves in the synthetic panel
    #[arg(long, default_value_t = 4)]
    pub panel_waves: usize,
    /// Held-out-wave simulations scored per specification
    #[arg(long, default_value_t = 50)]
    pub nsim: usize,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Estimate(args) => commands::estimate(&args),
        Cmd::Simulate(args) => commands::simulate(&args),
        Cmd::Gof(args) => commands::gof(&args),
        Cmd::Audit(args) => commands::audit(&args),
        Cmd::ReplicateFlaw(args) => commands::replicate_flaw(&args),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                netpanel::Error::Leakage { .. } => EXIT_LEAKAGE,
                _ => EXIT_VALIDATION,
            }
        }
    };
    std::process::exit(code);
}
