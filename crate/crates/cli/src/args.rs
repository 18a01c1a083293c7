use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gkdv", version, about = "Conservative pseudo-spectral gKdV solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single evolution: invariants.csv, summary.json and optional snapshots.
    Run(RunArgs),
    /// Several schemes on one scenario, plus a merged comparison.csv.
    Compare(CompareArgs),
    /// Step-size convergence study written to rates.csv.
    Converge(ConvergeArgs),
}

/// Settings shared by all subcommands. Precedence: flags, then the config
/// file, then the preset.
#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// example1 | example2 | example3 | breather_long
    #[arg(long)]
    pub preset: Option<String>,
    /// breather | two_soliton | scatter
    #[arg(long)]
    pub scenario: Option<String>,
    /// time step; fractions such as `1/40` are accepted
    #[arg(long, value_parser = crate::settings::parse_step)]
    pub tau: Option<f64>,
    /// final time
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// number of nodes
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// half-length of the domain [-L, L]; accepts a multiple of pi such as `30pi`
    #[arg(long = "L", value_parser = crate::settings::parse_length)]
    pub half_length: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub fp_tol: Option<f64>,
    #[arg(long)]
    pub fp_max_iter: Option<usize>,
    /// radicand threshold that triggers a C0 shift
    #[arg(long)]
    pub c0_tol: Option<f64>,
    /// fixed C0 instead of the automatic choice
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub warm_start: bool,
    /// turn off the 2/3 rule in the SS conservation-law substep
    #[arg(long)]
    pub no_ss_dealias: bool,
    /// record invariants every this many steps
    #[arg(long)]
    pub sample_every: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scheme: Option<String>,
    /// write a solution snapshot every K steps (100 when given without a value)
    #[arg(long, num_args = 0..=1, default_missing_value = "100", value_name = "K")]
    pub snapshots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// comma-separated scheme names
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// comma-separated step sizes; fractions such as `1/100` are accepted
    #[arg(long, value_delimiter = ',', value_parser = crate::settings::parse_step)]
    pub taus: Option<Vec<f64>>,
    /// step of the reference run for scenarios without an exact solution
    #[arg(long, value_parser = crate::settings::parse_step)]
    pub tau_ref: Option<f64>,
    /// largest accepted mETDRK4/SAV-IRK4 gap of the reference
    #[arg(long)]
    pub ref_tol: Option<f64>,
    /// accepted rates as `LO,HI`; default is the nominal rate +-25%
    #[arg(long, value_parser = crate::settings::parse_band)]
    pub rate_band: Option<(f64, f64)>,
}
