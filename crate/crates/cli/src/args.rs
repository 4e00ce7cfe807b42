use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Sensitivity analysis for natural direct and indirect effects under
/// unmeasured mediator-outcome confounding.
#[derive(Debug, Clone, Parser)]
#[command(name = "medsens", version)]
pub struct Cli {
    /// Effect scales to report.
    #[arg(long, value_enum, default_value_t = Scale::Both, global = true)]
    pub scale: Scale,

    /// Swap exposure codes 0 and 1 before estimation.
    #[arg(long, global = true)]
    pub relabel_exposure: bool,

    /// Pseudo-count added to every cell of each conditional table.
    #[arg(long, default_value_t = 0.0, global = true)]
    pub smoothing: f64,

    /// Seed for the oracle and bootstrap.
    #[arg(long, env = "MEDSENS_SEED", default_value_t = 0, global = true)]
    pub seed: u64,

    /// Output format. `sweep` and `parametric` default to CSV, the rest to JSON.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Rr,
    Rd,
    Both,
}

impl Scale {
    pub fn rr(self) -> bool {
        matches!(self, Scale::Rr | Scale::Both)
    }

    pub fn rd(self) -> bool {
        matches!(self, Scale::Rd | Scale::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Observed natural effects per covariate stratum.
    Estimate(EstimateArgs),
    /// Bounds on the true effects for given sensitivity parameters.
    Bound(BoundArgs),
    /// Minimum confounding strength that explains an observed direct effect away.
    Cornfield(CornfieldArgs),
    /// Bounds over a grid of sensitivity parameters.
    Sweep(SweepArgs),
    /// The collider-bias parameter under the log-linear mediator model.
    Parametric,
    /// Verify every bound against random discrete structural models.
    Oracle(OracleArgs),
    /// Percentile bootstrap intervals for observed effects and bounds.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Records as CSV with header a,m,y,c[,count].
    #[arg(long)]
    pub data: PathBuf,
}

/// Either a record file or published ratio-scale estimates.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Records as CSV with header a,m,y,c[,count].
    #[arg(long, conflicts_with_all = ["nde_rr", "nie_rr"], required_unless_present_any = ["nde_rr", "nie_rr"])]
    pub data: Option<PathBuf>,

    /// Observed natural direct effect, risk-ratio scale.
    #[arg(long)]
    pub nde_rr: Option<f64>,

    /// Confidence limits for --nde-rr, as LO,HI.
    #[arg(long, value_delimiter = ',', requires = "nde_rr")]
    pub nde_rr_ci: Option<Vec<f64>>,

    /// Observed natural indirect effect, risk-ratio scale.
    #[arg(long)]
    pub nie_rr: Option<f64>,

    /// Confidence limits for --nie-rr, as LO,HI.
    #[arg(long, value_delimiter = ',', requires = "nie_rr")]
    pub nie_rr_ci: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Collider-bias parameter (>= 1; `inf` leaves it unconstrained).
    #[arg(long)]
    pub rr_au: f64,

    /// Confounder-outcome parameter (>= 1; `inf` leaves it unconstrained).
    #[arg(long)]
    pub rr_uy: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CornfieldArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// True ratio-scale direct effect to explain the observed one down to.
    #[arg(long, default_value_t = 1.0)]
    pub target_rr: f64,

    /// True difference-scale direct effect to explain the observed one down to.
    #[arg(long, default_value_t = 0.0)]
    pub target_rd: f64,

    /// Fix the collider-bias parameter at this value and report the smallest
    /// confounder-outcome parameter that still reaches the target.
    #[arg(long)]
    pub rr_au_cap: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Ascending collider-bias values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rr_au: Vec<f64>,

    /// Ascending confounder-outcome values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rr_uy: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Random models per property run.
    #[arg(long, default_value_t = 10_000)]
    pub iterations: u64,

    /// Levels of the unmeasured confounder.
    #[arg(long, default_value_t = 2)]
    pub u_levels: usize,

    /// Mediator cardinalities to run, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    pub m_levels: Vec<usize>,

    /// Also run the floorless sampler with near-degenerate mediator laws.
    #[arg(long)]
    pub extreme: bool,

    /// Random instances for the ratio inequality.
    #[arg(long, default_value_t = 10_000)]
    pub lemma_instances: u64,

    /// Random perturbations in the sharpness search.
    #[arg(long, default_value_t = 2_000)]
    pub sharpness_iterations: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    /// Records as CSV with header a,m,y,c[,count].
    #[arg(long)]
    pub data: PathBuf,

    /// Bootstrap replicates (at least 100).
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,

    /// Two-sided interval level.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Collider-bias parameter for the bounded quantities.
    #[arg(long, default_value_t = 1.0)]
    pub rr_au: f64,

    /// Confounder-outcome parameter for the bounded quantities.
    #[arg(long, default_value_t = 1.0)]
    pub rr_uy: f64,
}
