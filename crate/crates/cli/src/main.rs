//! `suprec`: simulations, boundary curves, power calculations and the HTTP
//! service from one binary.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use suprec::gwas::Phi1Choice;
use suprec_service::ApiError;

#[derive(Debug, Parser)]
#[command(name = "suprec", version, about = "Support recovery phase diagrams and association power calculations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo risk estimates over a (beta, r) grid, written as CSV.
    Simulate(SimulateArgs),
    /// The five recovery boundaries sampled on a sparsity grid.
    Boundaries(BoundariesArgs),
    /// Marginal power of a single association test at a given sample size.
    Power(PowerArgs),
    /// Smallest number of subjects reaching a target power.
    SampleSize(SampleSizeArgs),
    /// Case fraction that maximizes the per-observation signal.
    Design(DesignArgs),
    /// Power over risk-allele frequency and odds ratio, optionally with
    /// catalog records placed on the surface.
    Orraf(OrrafArgs),
    /// Run the JSON service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment file (TOML `key = value` pairs); flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `chisq` or `gaussian`.
    #[arg(long)]
    pub model: Option<String>,
    /// Chi-square degrees of freedom.
    #[arg(long)]
    pub nu: Option<u32>,
    /// Dimension (number of locations).
    #[arg(long)]
    pub p: Option<usize>,
    /// Sparsity grid: `a,b,c` or `start:stop:count`.
    #[arg(long)]
    pub beta_grid: Option<String>,
    /// Signal grid in the same forms; empty for a null-only run.
    #[arg(long)]
    pub r_grid: Option<String>,
    /// Replications per cell (default 1000).
    #[arg(long)]
    pub reps: Option<u64>,
    /// Comma-separated procedures (default: the five data-driven ones).
    #[arg(long)]
    pub procedures: Option<String>,
    /// A level in (0, 1) or `slowly-vanishing` (the default, 1/(5 log p)).
    #[arg(long)]
    pub alpha: Option<String>,
    /// `equal` or `range`.
    #[arg(long)]
    pub signal: Option<String>,
    /// Half width of the signal range, with `--signal range`.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Master seed; derived and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundariesArgs {
    /// Interior grid i/(N+1), i = 1..N.
    #[arg(long, conflicts_with = "beta_grid")]
    pub beta_steps: Option<usize>,
    /// Explicit comma-separated values in (0, 1).
    #[arg(long)]
    pub beta_grid: Option<String>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Number of locations tested.
    #[arg(long)]
    pub p: u64,
    /// Family-wise error rate.
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Risk-allele frequency among controls.
    #[arg(long)]
    pub f: f64,
    /// Odds ratio.
    #[arg(long = "odds-ratio", short = 'R')]
    pub odds: f64,
    /// Case fraction, or `optimal`.
    #[arg(long, default_value = "optimal")]
    pub phi1: Phi1Choice,
    #[arg(long)]
    pub n_subjects: u64,
    /// 2 for diploid genotypes, 1 for haploid.
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALLELES)]
    pub per_subject_alleles: u32,
    /// Print the service's JSON body instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["fnr", "target_power"]))]
pub struct SampleSizeArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALPHA)]
    pub fwer: f64,
    #[arg(long)]
    pub f: f64,
    #[arg(long = "odds-ratio", short = 'R')]
    pub odds: f64,
    #[arg(long, default_value = "optimal")]
    pub phi1: Phi1Choice,
    /// Target false non-discovery rate.
    #[arg(long)]
    pub fnr: Option<f64>,
    /// Target power, i.e. 1 - fnr.
    #[arg(long)]
    pub target_power: Option<f64>,
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALLELES)]
    pub per_subject_alleles: u32,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub f: f64,
    #[arg(long = "odds-ratio", short = 'R')]
    pub odds: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OrrafArgs {
    /// Case fraction, or `optimal` per cell.
    #[arg(long, default_value = "0.5")]
    pub phi1: Phi1Choice,
    /// Observations (alleles) per location.
    #[arg(long, conflicts_with = "n_subjects")]
    pub n: Option<f64>,
    /// Subjects, converted with --per-subject-alleles.
    #[arg(long)]
    pub n_subjects: Option<u64>,
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALLELES)]
    pub per_subject_alleles: u32,
    #[arg(long, default_value_t = 100)]
    pub p: u64,
    #[arg(long, default_value_t = suprec_service::api::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub f_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub f_max: f64,
    /// Log-spaced frequency points.
    #[arg(long, default_value_t = 100)]
    pub f_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub r_max: f64,
    /// Linearly spaced odds-ratio points.
    #[arg(long, default_value_t = 100)]
    pub r_steps: usize,
    /// Comma-separated equi-signal levels (default 0.25,0.5,0.75,1.5,2,4).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Default: json when --out ends in `.json`, csv otherwise.
    #[arg(long, value_enum)]
    pub format: Option<GridFormat>,
    /// Catalog TSV (id, raf, or, n_cases, n_controls) to overlay.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Overlay CSV destination; required with --catalog in csv format.
    #[arg(long, requires = "catalog")]
    pub catalog_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// HOST:PORT to bind.
    #[arg(long, default_value = suprec_service::DEFAULT_LISTEN)]
    pub listen: SocketAddr,
    /// Static files served under /app.
    #[arg(long)]
    pub app_dir: Option<PathBuf>,
}

/// Failure classes, mapped onto exit codes 2 and 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<suprec::Error> for CliError {
    fn from(e: suprec::Error) -> Self {
        match e {
            suprec::Error::Domain(_) | suprec::Error::Parse { .. } => CliError::Usage(e.to_string()),
            suprec::Error::Infeasible(_) | suprec::Error::Io { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::Invalid(_) | ApiError::TooLarge(_) => CliError::Usage(e.to_string()),
            ApiError::Infeasible(_) | ApiError::Internal(_) => CliError::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Boundaries(a) => commands::boundaries(a),
        Command::Power(a) => commands::power(a),
        Command::SampleSize(a) => commands::sample_size(a),
        Command::Design(a) => commands::design(a),
        Command::Orraf(a) => commands::orraf(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("suprec: {msg}");
            ExitCode::from(e.code())
        }
    }
}
