//! `be-lab`: spectral measures, Kolmogorov distances, smoothing-inequality
//! checks and bound constants from the command line.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid configuration,
//! 3 precondition or window violation, 4 an inequality falsified.

mod commands;

use be_lab::harness::{DecaySpec, ModelFamily, PathChoice, StateFamily};
use be_lab::states::PrefactorConvention;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "be-lab", version, about = "Berry-Esseen diagnostics for quantum lattice Hamiltonians")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectral measure of H in the state.
    Spectrum(SpectrumArgs),
    /// Kolmogorov distance to the standard normal (one sweep row).
    Delta(InstanceArgs),
    /// Characteristic function of the standardized Hamiltonian.
    Phi(PhiArgs),
    /// Esseen's smoothing inequality across cutoffs.
    Esseen(EsseenArgs),
    /// Theorem bounds, or the envelope check at fixed (ℓ, M, K).
    Bound(BoundArgs),
    /// Scaling sweep over system size.
    Sweep(SweepArgs),
    /// Residual of the exact characteristic-function ODE.
    #[command(name = "verify-lemma1")]
    VerifyLemma1(LemmaArgs),
    /// Commutator-expansion certificates on random 2-local pairs.
    ClusterCheck(ClusterArgs),
    /// Lattice dimension certificate (D, c_D).
    DimCert(DimArgs),
}

/// Model instance selection; flags override the JSON config.
#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// JSON sweep config supplying defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// zz-chain, zz-ring, tfim[:g], tfim-ring[:g], field[:h], random-2local.
    #[arg(long)]
    pub model: Option<ModelFamily>,
    /// maximally-mixed, basis-zero, tilted[:θ], gibbs:β.
    #[arg(long)]
    pub state: Option<StateFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// auto, exact, fast_commuting.
    #[arg(long)]
    pub path: Option<PathChoice>,
    #[arg(long)]
    pub c0: Option<f64>,
    /// none, exp:ξ[:L₀], alg:β[:L₀].
    #[arg(long)]
    pub decay: Option<DecaySpec>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Atoms of (H − μ)/σ instead of H.
    #[arg(long)]
    pub standardized: bool,
    /// Write the atoms as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum PhiMethod {
    EigenSum,
    Evolution,
    Both,
}

#[derive(Args, Debug)]
pub struct PhiArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 5.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = PhiMethod::EigenSum)]
    pub method: PhiMethod,
    /// Write the curve as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EsseenArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Comma-separated cutoffs; defaults to 1,2,5,10,√N.
    #[arg(long, value_delimiter = ',')]
    pub omegas: Vec<f64>,
    #[arg(long = "C", default_value_t = be_lab::esseen::DEFAULT_ESSEEN_C)]
    pub c: f64,
    #[arg(long, default_value_t = be_lab::esseen::DEFAULT_QUADRATURE_TOL)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum ConventionArg {
    WithMinSupport,
    Without,
}

impl From<ConventionArg> for PrefactorConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::WithMinSupport => PrefactorConvention::WithMinSupport,
            ConventionArg::Without => PrefactorConvention::Without,
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Lattice dimension D (abstract mode).
    #[arg(long, default_value_t = 1)]
    pub d: u32,
    /// Shell constant c_D (abstract mode).
    #[arg(long, default_value_t = 2.0)]
    pub c_d: f64,
    /// Locality radius R (abstract mode).
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Term bound E (abstract mode).
    #[arg(long, default_value_t = 1.0)]
    pub e: f64,
    /// σ_H² (abstract mode); defaults to c₀E²N.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Terms commute (abstract mode).
    #[arg(long)]
    pub commuting: bool,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long = "C", default_value_t = be_lab::esseen::DEFAULT_ESSEEN_C)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::WithMinSupport)]
    pub convention: ConventionArg,
    /// Check the envelope at this ℓ (needs --m, --k and --model).
    #[arg(long)]
    pub ell: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub points: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Comma-separated system sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Output directory for results.csv, results.json and metadata.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the Esseen column.
    #[arg(long)]
    pub no_esseen: bool,
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    pub ell: usize,
    /// Truncation order M.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 0.95)]
    pub omega_max: f64,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub max_sites: usize,
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long, default_value_t = 10)]
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum LatticeArg {
    Chain,
    Ring,
    Grid,
}

#[derive(Args, Debug)]
pub struct DimArgs {
    #[arg(long, value_enum, default_value_t = LatticeArg::Chain)]
    pub lattice: LatticeArg,
    /// Comma-separated extents, e.g. 4,4 for a grid.
    #[arg(long, value_delimiter = ',', required = true)]
    pub extents: Vec<usize>,
    /// Periodic grid.
    #[arg(long)]
    pub wrap: bool,
    /// Exponent D; defaults to the geometric dimension.
    #[arg(long)]
    pub d: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(commands::run(cli))
}
