//! Argument definitions.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use trinet_core::inflation::{DEFAULT_LEVEL, DEFAULT_MAX_INJECTABLE};
use trinet_core::quantum::{DEFAULT_GRID, DEFAULT_REFINE_ITERS};
use trinet_core::Visibility;

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "trinet", version, about = "Noisy W distributions in the triangle network")]
pub struct Cli {
    /// Also write the outputs as files into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the noisy W distribution at visibility v.
    Wdist {
        /// Visibility as "num/den", an integer or a decimal.
        #[arg(long)]
        v: Visibility,
    },
    /// The five-parameter quantum model.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Alternating optimization over three quantum testers.
    Seesaw(SeesawArgs),
    /// Inflation linear program for a target distribution.
    Inflate(InflateArgs),
    /// Classical triangle-local models.
    Local {
        #[command(subcommand)]
        action: LocalAction,
    },
    /// Run a subcommand described by a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelAction {
    /// Distribution of a parameter file.
    Eval {
        #[arg(long)]
        params: PathBuf,
    },
    /// Fit the model to W at v.
    Fit {
        #[arg(long)]
        v: Visibility,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_REFINE_ITERS)]
        refine_iters: usize,
    },
    /// Fit on the grid from, from + step, ... up to to; writes CSV.
    Scan {
        #[arg(long)]
        from: Visibility,
        #[arg(long)]
        to: Visibility,
        #[arg(long)]
        step: Visibility,
    },
    /// CHSH value of the fitted model, or the visibility where it exceeds 2.
    #[command(group(ArgGroup::new("mode").required(true).args(["v", "onset"])))]
    Chsh {
        #[arg(long)]
        v: Option<Visibility>,
        /// Bisect the onset between two visibilities.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        onset: Option<Vec<Visibility>>,
        #[arg(long, default_value_t = 12)]
        depth: usize,
    },
}

/// A target distribution: W at a visibility or a distribution file.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct TargetArgs {
    /// Noisy W at this visibility.
    #[arg(long)]
    pub w: Option<Visibility>,
    /// Distribution JSON file.
    #[arg(long)]
    pub target: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeesawArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Dimension of every wire.
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_sweeps: usize,
    /// Iteration cap of each block solve.
    #[arg(long, default_value_t = 50)]
    pub block_iters: usize,
    /// Skip the line search along each sweep's direction.
    #[arg(long)]
    pub no_extrapolate: bool,
    /// Joint damped steps on all three testers after the sweeps.
    #[arg(long, default_value_t = 0)]
    pub polish_steps: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("inflate_target").required(true).args(["v", "target"])))]
pub struct InflateArgs {
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: usize,
    /// Noisy W at this visibility.
    #[arg(long)]
    pub v: Option<Visibility>,
    /// Distribution JSON file.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Round the certificate to rationals and verify it exactly.
    #[arg(long)]
    pub exact_certificate: bool,
    /// Largest injectable set used in the marginal constraints.
    #[arg(long, default_value_t = DEFAULT_MAX_INJECTABLE)]
    pub max_injectable: usize,
    /// Solve the full program with symmetry rows instead of the
    /// orbit-reduced one.
    #[arg(long)]
    pub unreduced: bool,
    /// Also decide feasibility with an interior-point solver on the full
    /// program and report whether the verdicts agree.
    #[arg(long)]
    pub cross_check: bool,
    /// Bisect the detection threshold between --v (feasible) and this
    /// visibility (infeasible).
    #[arg(long, requires = "v", conflicts_with_all = ["target", "cross_check", "unreduced"])]
    pub bisect_to: Option<Visibility>,
    #[arg(long, default_value_t = 10, requires = "bisect_to")]
    pub depth: usize,
}

#[derive(Debug, Subcommand)]
pub enum LocalAction {
    /// Distribution of a local model file.
    Eval {
        #[arg(long)]
        model: PathBuf,
    },
    /// Search for a local model of given cardinalities.
    Search {
        #[command(flatten)]
        target: TargetArgs,
        /// Cardinalities of alpha, beta, gamma.
        #[arg(long, value_delimiter = ',', default_values_t = [3, 2, 2])]
        cards: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Evaluate the published (3, 2, 2) local model and compare it with the
    /// published distribution and the quantum model.
    #[command(name = "verify-appendix-b")]
    VerifyGolden,
}
