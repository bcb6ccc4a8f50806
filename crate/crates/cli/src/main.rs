//! `duopoly`: command-line pipeline for the two-platform auction market
//! toolkit: fee quotes, panel handling, elasticity estimation, equilibrium
//! solving, and the end-to-end replication run.
//!
//! Exit status: 0 success, 1 validation/input error, 2 solver or
//! no-equilibrium error, 3 I/O error.

mod commands;
mod render;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use duopoly_core::error::Error;
use duopoly_core::money::Money;

use render::Format;

#[derive(Parser)]
#[command(
    name = "duopoly",
    version,
    about = "Two-platform auction market analysis"
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fee-schedule calculations.
    #[command(subcommand)]
    Fees(FeesCmd),
    /// Panel ingestion, statistics, and synthesis.
    #[command(subcommand)]
    Data(DataCmd),
    /// Elasticity estimation.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Equilibrium solving, dynamics, and counterfactuals.
    #[command(subcommand)]
    Equilibrium(EquilibriumCmd),
    /// Run the full desk-scale replication end to end.
    Replicate(ReplicateArgs),
}

fn parse_money(s: &str) -> Result<Money, String> {
    Money::from_str(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
pub enum FeesCmd {
    /// Total seller fee for one platform at a reference sale.
    Quote(QuoteArgs),
    /// Effective premium of platform E over platform Y.
    Alpha(AlphaArgs),
    /// Smallest closing value reaching a target premium.
    Invert(InvertArgs),
}

#[derive(Args)]
pub struct QuoteArgs {
    /// Platform: E or Y.
    #[arg(long)]
    pub platform: String,
    /// Opening value in dollars (two decimals).
    #[arg(long, value_parser = parse_money)]
    pub opening: Money,
    /// Closing value in dollars (two decimals).
    #[arg(long, value_parser = parse_money)]
    pub closing: Money,
    /// Optional schedule file (flat key=value) replacing the built-ins.
    #[arg(long)]
    pub schedules: Option<PathBuf>,
}

#[derive(Args)]
pub struct AlphaArgs {
    #[arg(long, value_parser = parse_money)]
    pub opening: Money,
    #[arg(long, value_parser = parse_money)]
    pub closing: Money,
    #[arg(long)]
    pub schedules: Option<PathBuf>,
}

#[derive(Args)]
pub struct InvertArgs {
    /// Premium target, a fraction of the closing value.
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_money)]
    pub opening: Money,
    #[arg(long)]
    pub schedules: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum DataCmd {
    /// Validate a panel file and echo it normalized.
    Parse(ParseArgs),
    /// Per-site means, usage-per-listing ratios, complete-week counts.
    Stats(StatsArgs),
    /// Generate a synthetic panel (or the canonical replication panel).
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub panel: PathBuf,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub panel: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Emit the canonical replication panel and ignore the knobs below.
    #[arg(long, default_value_t = false)]
    pub canonical: bool,
    #[arg(long, default_value_t = 17)]
    pub weeks: u32,
    /// Usage metric to fill: uv or pv.
    #[arg(long, default_value = "uv")]
    pub metric: String,
    /// Standard deviation of the multiplicative log-normal usage noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mean weekly listings (thousands) for platform E.
    #[arg(long, default_value_t = 5822.0)]
    pub listings_e: f64,
    /// Mean weekly listings (thousands) for platform Y.
    #[arg(long, default_value_t = 3349.0)]
    pub listings_y: f64,
    /// Model parameter file (flat key=value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter override, key=value; wins over the config file.
    #[arg(long)]
    pub param: Vec<String>,
}

#[derive(Subcommand)]
pub enum EstimateCmd {
    /// Revenue elasticity with respect to potential bidders.
    Revenue(RevenueArgs),
    /// Pooled usage regression on own and rival listings.
    Usage(UsageArgs),
}

#[derive(Args)]
pub struct RevenueArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Effective premium the indifference condition is closed at.
    #[arg(long)]
    pub alpha: f64,
    /// uv or pv.
    #[arg(long, default_value = "uv")]
    pub metric: String,
}

#[derive(Args)]
pub struct UsageArgs {
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long, default_value = "uv")]
    pub metric: String,
}

#[derive(Subcommand)]
pub enum EquilibriumCmd {
    /// Solve for the listing equilibrium under the chosen closure.
    Solve(SolveArgs),
    /// Record the damped adjustment path period by period.
    Dynamics(DynamicsArgs),
    /// Solve the market under two fee regimes and report the changes.
    Counterfactual(CounterfactualArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    /// Model parameter file (flat key=value).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter override, key=value; wins over the config file.
    #[arg(long)]
    pub param: Vec<String>,
    /// fixed-total or elastic-entry.
    #[arg(long, default_value = "fixed-total")]
    pub closure: String,
    /// Total listings (thousands), for the fixed-total closure.
    #[arg(long)]
    pub total: Option<f64>,
    /// Outside option (dollars per listing), for the elastic-entry closure.
    #[arg(long)]
    pub outside: Option<f64>,
    /// Ad-valorem fee rate on platform E.
    #[arg(long, default_value_t = 0.0)]
    pub alpha_e: f64,
    /// Insertion fee (dollars) on platform E.
    #[arg(long, default_value_t = 0.0)]
    pub fee_e: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_y: f64,
    #[arg(long, default_value_t = 0.0)]
    pub fee_y: f64,
    /// Usage metric label carried into reports: uv or pv.
    #[arg(long, default_value = "uv")]
    pub metric: String,
    #[arg(long, default_value_t = duopoly_core::equilibrium::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Grid points for the fixed-total share scan.
    #[arg(long, default_value_t = duopoly_core::equilibrium::DEFAULT_GRID_POINTS)]
    pub grid: usize,
    /// Observed E share used to pick the headline root.
    #[arg(long)]
    pub reference_share: Option<f64>,
    /// Starting listings for elastic-entry runs (thousands).
    #[arg(long)]
    pub initial_le: Option<f64>,
    #[arg(long)]
    pub initial_ly: Option<f64>,
    /// Adjustment damping in (0, 1].
    #[arg(long, default_value_t = duopoly_core::equilibrium::DEFAULT_DAMPING)]
    pub damping: f64,
}

#[derive(Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Maximum periods to iterate.
    #[arg(long, default_value_t = 200)]
    pub periods: usize,
}

#[derive(Args)]
pub struct CounterfactualArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Post-change fee terms; any omitted flag keeps the base value.
    #[arg(long)]
    pub new_alpha_e: Option<f64>,
    #[arg(long)]
    pub new_fee_e: Option<f64>,
    #[arg(long)]
    pub new_alpha_y: Option<f64>,
    #[arg(long)]
    pub new_fee_y: Option<f64>,
}

#[derive(Args)]
pub struct ReplicateArgs {
    /// Seed for the estimator-validation block.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidInput(_)
        | Error::Parse { .. }
        | Error::Validation(_)
        | Error::SingularDesign(_)
        | Error::InsufficientData(_) => 1,
        Error::NoSolution(_) | Error::NoEquilibrium(_) | Error::Diverged { .. } => 2,
        Error::Io(_) => 3,
    }
}

fn run(cli: Cli) -> duopoly_core::Result<String> {
    let format = cli.format;
    match cli.command {
        Command::Fees(cmd) => commands::fees(cmd, format),
        Command::Data(cmd) => commands::data(cmd, format),
        Command::Estimate(cmd) => commands::estimate(cmd, format),
        Command::Equilibrium(cmd) => commands::equilibrium(cmd, format),
        Command::Replicate(args) => commands::replicate(args, format),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            std::process::exit(0);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
