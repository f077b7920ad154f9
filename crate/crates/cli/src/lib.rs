//! Command-line surface: argument parsing and dispatch.

pub mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridtrade_core::{FitnessWeights, GaConfig, GenSpec, PayoffKey, SurplusFloorPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "gridtrade",
    version,
    about = "Peer-to-peer energy trading simulator for communities of microgrids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic community scenario file
    Generate(GenerateArgs),
    /// Optimize trading for a scenario and export stats, trades and settlement
    Run(RunArgs),
    /// Run a grid of optimizer configurations and tabulate the results
    Sweep(SweepArgs),
    /// Compare the optimizer against exhaustive search on a tiny scenario
    Oracle(OracleArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => commands::cmd_generate(&args),
        Command::Run(args) => commands::cmd_run(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
        Command::Oracle(args) => commands::cmd_oracle(&args),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// Sellers may discharge down to their buy threshold (default)
    BuyThreshold,
    /// Sellers may only discharge energy above their sell threshold
    SellThreshold,
}

impl From<PolicyArg> for SurplusFloorPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::BuyThreshold => SurplusFloorPolicy::BuyThreshold,
            PolicyArg::SellThreshold => SurplusFloorPolicy::SellThreshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayoffKeyArg {
    Buyer,
    Seller,
}

impl From<PayoffKeyArg> for PayoffKey {
    fn from(k: PayoffKeyArg) -> Self {
        match k {
            PayoffKeyArg::Buyer => PayoffKey::Buyer,
            PayoffKeyArg::Seller => PayoffKey::Seller,
        }
    }
}

/// Fitness coefficients, exposed one-to-one as flags.
#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Weight of the seller payoff term
    #[arg(long, default_value_t = FitnessWeights::default().alpha)]
    pub alpha: f64,
    /// Weight of the stable-microgrid count
    #[arg(long, default_value_t = FitnessWeights::default().beta)]
    pub beta: f64,
    /// Weight of the community stability bonus
    #[arg(long, default_value_t = FitnessWeights::default().gamma)]
    pub gamma: f64,
    /// Multiplier on the aggregate penalty
    #[arg(long, default_value_t = FitnessWeights::default().delta)]
    pub delta: f64,
    /// Weight of the instability penalty
    #[arg(long, default_value_t = FitnessWeights::default().w1)]
    pub w1: f64,
    /// Weight of the dove over-trading penalty
    #[arg(long, default_value_t = FitnessWeights::default().w2)]
    pub w2: f64,
    /// Weight of the battery-cycle penalty
    #[arg(long, default_value_t = FitnessWeights::default().w3)]
    pub w3: f64,
    /// Weight of the line-overhead penalty
    #[arg(long, default_value_t = FitnessWeights::default().w4)]
    pub w4: f64,
    /// Tolerated fraction of the line limit before overhead kicks in
    #[arg(long, default_value_t = FitnessWeights::default().mu)]
    pub mu: f64,
    /// Distinct buyers a dove seller may serve without penalty
    #[arg(long = "n-max", default_value_t = FitnessWeights::default().n_max)]
    pub n_max: usize,
    /// Profit per kWh when the keyed endpoint ends stable
    #[arg(long, default_value_t = FitnessWeights::default().payoff_stable)]
    pub payoff_stable: f64,
    /// Profit per kWh otherwise
    #[arg(long, default_value_t = FitnessWeights::default().payoff_other)]
    pub payoff_other: f64,
    /// Whose final stability selects the payoff coefficient
    #[arg(long, value_enum, default_value_t = PayoffKeyArg::Buyer)]
    pub payoff_keyed: PayoffKeyArg,
}

impl WeightArgs {
    pub fn to_weights(&self) -> FitnessWeights {
        FitnessWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
            w1: self.w1,
            w2: self.w2,
            w3: self.w3,
            w4: self.w4,
            mu: self.mu,
            n_max: self.n_max,
            payoff_stable: self.payoff_stable,
            payoff_other: self.payoff_other,
            payoff_keyed_to: self.payoff_keyed.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output scenario file; a generation-recipe sidecar is written next to it
    #[arg(long, default_value = "scenario.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = GenSpec::default().n)]
    pub n: usize,
    #[arg(long, default_value_t = GenSpec::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = GenSpec::default().energy_range.0)]
    pub energy_min: f64,
    #[arg(long, default_value_t = GenSpec::default().energy_range.1)]
    pub energy_max: f64,
    #[arg(long, default_value_t = GenSpec::default().cycles_range.0)]
    pub cycles_min: u32,
    #[arg(long, default_value_t = GenSpec::default().cycles_range.1)]
    pub cycles_max: u32,
    #[arg(long, default_value_t = GenSpec::default().capacity_range.0)]
    pub capacity_min: f64,
    #[arg(long, default_value_t = GenSpec::default().capacity_range.1)]
    pub capacity_max: f64,
    /// Buy threshold range as fractions of capacity
    #[arg(long, default_value_t = GenSpec::default().bt_fraction_range.0)]
    pub bt_frac_min: f64,
    #[arg(long, default_value_t = GenSpec::default().bt_fraction_range.1)]
    pub bt_frac_max: f64,
    /// Sell threshold range as fractions of capacity
    #[arg(long, default_value_t = GenSpec::default().st_fraction_range.0)]
    pub st_frac_min: f64,
    #[arg(long, default_value_t = GenSpec::default().st_fraction_range.1)]
    pub st_frac_max: f64,
    /// Share of microgrids that start in deficit
    #[arg(long, default_value_t = GenSpec::default().target_buyer_fraction)]
    pub buyer_fraction: f64,
    /// Per-interaction transfer cap of the generated scenario, kWh
    #[arg(long, default_value_t = GenSpec::default().thv)]
    pub thv: f64,
    /// Per-microgrid line limit of the generated scenario, kWh
    #[arg(long, default_value_t = GenSpec::default().line_limit)]
    pub line_limit: f64,
}

impl GenerateArgs {
    pub fn to_spec(&self) -> GenSpec {
        GenSpec {
            n: self.n,
            energy_range: (self.energy_min, self.energy_max),
            cycles_range: (self.cycles_min, self.cycles_max),
            capacity_range: (self.capacity_min, self.capacity_max),
            bt_fraction_range: (self.bt_frac_min, self.bt_frac_max),
            st_fraction_range: (self.st_frac_min, self.st_frac_max),
            target_buyer_fraction: self.buyer_fraction,
            thv: self.thv,
            line_limit: self.line_limit,
            seed: self.seed,
        }
    }
}

/// Optimizer budget and seed.
#[derive(Debug, Clone, Args)]
pub struct GaArgs {
    #[arg(long, default_value_t = 500)]
    pub generations: usize,
    #[arg(long, default_value_t = 80)]
    pub pop: usize,
    #[arg(long, default_value_t = 13)]
    pub elite: usize,
    /// Floor of the decaying mutation rate
    #[arg(long, default_value_t = 0.005)]
    pub pmin: f64,
    /// Mating pool size; defaults to a quarter of the population
    #[arg(long)]
    pub mating_pool: Option<usize>,
    /// Gaussian mutation step in kWh; defaults to a tenth of the scenario thv
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 120)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::BuyThreshold)]
    pub policy: PolicyArg,
}

impl GaArgs {
    pub fn to_config(&self, thv: f64, weights: FitnessWeights) -> GaConfig {
        GaConfig {
            pop_size: self.pop,
            generations: self.generations,
            elite_size: self.elite,
            mating_pool_size: self.mating_pool.unwrap_or_else(|| (self.pop / 4).max(2)),
            p_min: self.pmin,
            sigma: self.sigma.unwrap_or(0.1 * thv),
            seed: self.seed,
            weights,
            policy: self.policy.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file to optimize
    #[arg(long)]
    pub scenario: PathBuf,
    /// Results directory; defaults to $GRIDTRADE_OUT or ./results
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub ga: GaArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario file to optimize
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output CSV table
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    /// Generation counts to sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub generations: Vec<usize>,
    /// Population sizes to sweep
    #[arg(long, value_delimiter = ',')]
    pub pop: Vec<usize>,
    /// Elite sizes to sweep
    #[arg(long, value_delimiter = ',')]
    pub elite: Vec<usize>,
    /// Mutation-rate floors to sweep
    #[arg(long, value_delimiter = ',')]
    pub pmin: Vec<f64>,
    /// Explicit configurations as generations:pop:elite:pmin tuples,
    /// bypassing the Cartesian grid
    #[arg(long, value_delimiter = ',')]
    pub configs: Vec<String>,
    /// Refuse grids larger than this
    #[arg(long, default_value_t = 64)]
    pub max_runs: usize,
    #[arg(long)]
    pub mating_pool: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 120)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::BuyThreshold)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Tiny scenario file to solve exactly and by evolution
    #[arg(long)]
    pub scenario: PathBuf,
    /// Grid step of the exhaustive search, kWh; defaults to thv / 8
    #[arg(long)]
    pub step: Option<f64>,
    /// Refuse instances with more valid seller-buyer cells than this
    #[arg(long, default_value_t = 6)]
    pub max_cells: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 40)]
    pub pop: usize,
    #[arg(long, default_value_t = 6)]
    pub elite: usize,
    #[arg(long, default_value_t = 0.005)]
    pub pmin: f64,
    #[arg(long)]
    pub mating_pool: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 120)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::BuyThreshold)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub weights: WeightArgs,
}
