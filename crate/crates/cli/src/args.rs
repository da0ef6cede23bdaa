use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use hierpin_core::DisorderLaw;

#[derive(Debug, Parser)]
#[command(
    name = "hierpin",
    version,
    about = "Free energies, walk probabilities and localization certificates for the hierarchical pinning model",
    args_override_self = true,
    allow_negative_numbers = true
)]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with flag values; top-level keys apply to every command,
    /// a `[command]` table to that command only. Flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file. Defaults to `$HIERPIN_OUT_DIR/<command>.<format>` when
    /// that variable is set, else stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annealed (disorder-free) free energy, one row per h.
    Annealed(AnnealedArgs),
    /// Population-dynamics estimate of the quenched free energy on a (beta, h) grid.
    Quenched(QuenchedArgs),
    /// Pseudo-critical point by bisection in h, one row per (beta, levels).
    Scan(ScanArgs),
    /// Wall-avoidance probabilities q_m, crossing probabilities and path counts.
    Walkprob(WalkArgs),
    /// Good-diamond lower bound on the quenched free energy.
    Certify(CertifyArgs),
    /// Exhaustive enumeration on small lattices against the recursion.
    OracleCheck(OracleArgs),
    /// Fit of -log F(log(1+eps)) against 1/eps.
    FitSingularity(FitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Annealed(_) => "annealed",
            Command::Quenched(_) => "quenched",
            Command::Scan(_) => "scan",
            Command::Walkprob(_) => "walkprob",
            Command::Certify(_) => "certify",
            Command::OracleCheck(_) => "oracle-check",
            Command::FitSingularity(_) => "fit-singularity",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Lattice {
    /// Branches per diamond.
    #[arg(long, default_value_t = 2)]
    pub b: usize,
    /// Bonds per branch.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
}

fn parse_law(s: &str) -> Result<DisorderLaw, String> {
    s.parse().map_err(|e: hierpin_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct AnnealedArgs {
    #[command(flatten)]
    pub lattice: Lattice,
    /// Comma-separated list of pinning potentials.
    #[arg(long, required = true, value_delimiter = ',', action = ArgAction::Set)]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = hierpin_core::annealed::DEFAULT_MAX_LEVELS)]
    pub max_levels: usize,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct QuenchedArgs {
    #[command(flatten)]
    pub lattice: Lattice,
    #[arg(long, default_value = "1", value_delimiter = ',', action = ArgAction::Set)]
    pub beta: Vec<f64>,
    #[arg(long, required = true, value_delimiter = ',', action = ArgAction::Set)]
    pub h: Vec<f64>,
    /// gaussian, signs, or discrete[v1:p1;v2:p2;...]
    #[arg(long, default_value = "gaussian", value_parser = parse_law)]
    pub law: DisorderLaw,
    #[arg(long, default_value_t = hierpin_core::population::DEFAULT_POOL_SIZE)]
    pub pool: usize,
    #[arg(long, default_value_t = hierpin_core::population::DEFAULT_LEVELS)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct ScanArgs {
    #[command(flatten)]
    pub lattice: Lattice,
    #[arg(long, default_value = "1", value_delimiter = ',', action = ArgAction::Set)]
    pub beta: Vec<f64>,
    #[arg(long, default_value = "gaussian", value_parser = parse_law)]
    pub law: DisorderLaw,
    #[arg(long, default_value_t = hierpin_core::population::DEFAULT_POOL_SIZE)]
    pub pool: usize,
    /// Comma-separated list of depths.
    #[arg(long, default_value = "30", value_delimiter = ',', action = ArgAction::Set)]
    pub levels: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub h_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct WalkArgs {
    /// Branches per diamond; defaults to s.
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Last level of the table.
    #[arg(long)]
    pub n: usize,
    /// Lower level of the crossing probabilities p_{k,m}.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub lattice: Lattice,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value = "gaussian", value_parser = parse_law)]
    pub law: DisorderLaw,
    /// Block level; with --n evaluates one (k, n), otherwise searches.
    #[arg(long, requires = "n")]
    pub k: Option<usize>,
    #[arg(long, requires = "k")]
    pub n: Option<usize>,
    /// Pool size for the variance of R_k.
    #[arg(long, default_value_t = 100_000)]
    pub pool: usize,
    /// Independent blocks for p_good.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Three-standard-error safety margins on p_good and the variance.
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub conservative: bool,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct OracleArgs {
    #[command(flatten)]
    pub lattice: Lattice,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    #[arg(long, default_value = "gaussian", value_parser = parse_law)]
    pub law: DisorderLaw,
    /// Largest lattice level; every level from 0 is checked.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allowed relative error of the partition function.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct FitArgs {
    /// Bonds per branch; the fit needs b = s.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Comma-separated eps grid.
    #[arg(
        long,
        default_value = "0.03,0.045,0.06,0.075,0.09,0.105,0.12,0.135,0.15",
        value_delimiter = ',',
        action = ArgAction::Set
    )]
    pub eps: Vec<f64>,
}
