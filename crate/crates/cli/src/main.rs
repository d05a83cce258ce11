use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use netguide::netgraph::NetworkMode;
use netguide::relevance::Summary;
use netguide::selectpipe::{Axis, Criterion, GraphKind, Method};

mod run;
mod tasks;

#[derive(Parser)]
#[command(name = "netguide", version, about = "Network-guided feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a feature network from genomic positions and gene intervals.
    BuildNetwork(BuildNetworkArgs),
    /// Summarize feature p-values per gene and convert them to z-scores.
    GenePvals(GenePvalsArgs),
    /// Greedy dense-module search on a gene network.
    Modules(ModulesArgs),
    /// Exact graph-cut selection for one phenotype.
    Scones(SconesArgs),
    /// Exact graph-cut selection coupled across several phenotypes.
    MultiScones(MultiSconesArgs),
    /// Lasso regression.
    Lasso(RegressionArgs),
    /// Lasso plus a graph Laplacian penalty.
    Grace(RegressionArgs),
    /// Generalized fused lasso over network edges.
    Gfl(RegressionArgs),
    /// Overlapping group lasso.
    Ogl(RegressionArgs),
    /// Graph-guided group lasso.
    Gggl(RegressionArgs),
    /// Multi-task lasso.
    Mtlasso(MtlassoArgs),
    /// Cross-validated grid search over a method's hyperparameters.
    Cv(CvArgs),
    /// Write a synthetic dataset with a planted connected module.
    Synth(SynthArgs),
}

#[derive(Args)]
pub struct Output {
    /// Report path; a sibling `<stem>.selected.txt` lists the selected ids.
    /// Prints the report to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct Inputs {
    /// Samples × features matrix (`sample_id<TAB>f1<TAB>...`).
    #[arg(long)]
    pub features: PathBuf,
    /// `sample_id<TAB>value`.
    #[arg(long)]
    pub phenotype: PathBuf,
}

#[derive(Args)]
pub struct BuildNetworkArgs {
    /// `feature_id<TAB>chrom<TAB>pos`.
    #[arg(long)]
    pub positions: PathBuf,
    /// `gene_id<TAB>chrom<TAB>start<TAB>end`.
    #[arg(long)]
    pub genes: PathBuf,
    /// Gene-gene edge list, required for `--mode interaction`.
    #[arg(long)]
    pub gene_network: Option<PathBuf>,
    #[arg(long, default_value = "gene")]
    pub mode: NetworkMode,
    /// Bases added on each side of a gene when mapping features.
    #[arg(long, default_value_t = netguide::netgraph::DEFAULT_WINDOW)]
    pub window: u64,
    /// Edge list to write; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenePvalsArgs {
    /// `feature_id<TAB>p`.
    #[arg(long)]
    pub pvals: PathBuf,
    /// `feature_id<TAB>gene_id`.
    #[arg(long)]
    pub mapping: PathBuf,
    #[arg(long, default_value = "min")]
    pub method: Summary,
    /// `gene_id<TAB>p<TAB>z` lines; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ModulesArgs {
    /// `gene_id<TAB>p<TAB>z`, as written by `gene-pvals`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Gene edge list.
    #[arg(long)]
    pub network: PathBuf,
    /// Minimum relative score gain for adding a gene.
    #[arg(long, default_value_t = 0.1)]
    pub r: f64,
    #[arg(long, default_value_t = 2)]
    pub max_depth: usize,
    /// `rank<TAB>score<TAB>gene_ids`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SconesArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Feature edge list (`id_a<TAB>id_b[<TAB>weight]`).
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, required_unless_present = "eta_grid")]
    pub eta: Option<f64>,
    #[arg(long, required_unless_present = "lambda_grid")]
    pub lambda: Option<f64>,
    /// Solve every value of a grid, e.g. `log:1e-3:1e3:7` or `0,0.5,1`.
    #[arg(long)]
    pub eta_grid: Option<Axis>,
    #[arg(long)]
    pub lambda_grid: Option<Axis>,
    /// Standardize features before scoring relevance.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct MultiSconesArgs {
    /// Directory with one subdirectory per task holding `features.tsv`,
    /// `phenotype.tsv` and optionally `network.tsv`.
    #[arg(long)]
    pub tasks: PathBuf,
    /// Network for tasks without their own `network.tsv`.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct Solver {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Fit on raw X and y instead of centering them.
    #[arg(long)]
    pub no_center: bool,
}

#[derive(Args)]
pub struct RegressionArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Feature network (grace, gfl).
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// `group_id<TAB>feature_id` (ogl, gggl).
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Edge list over group ids (gggl).
    #[arg(long)]
    pub gene_network: Option<PathBuf>,
    /// ℓ1 weight (lasso, gfl), group weight (ogl, gggl).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fusion weight (gfl).
    #[arg(long)]
    pub eta: Option<f64>,
    /// ℓ1 weight (grace, gggl).
    #[arg(long)]
    pub eta1: Option<f64>,
    /// Laplacian weight (grace), graph coupling weight (gggl).
    #[arg(long)]
    pub eta2: Option<f64>,
    /// Fit a warm-started path from the zero threshold down instead of one
    /// value of the path parameter.
    #[arg(long)]
    pub lambda_path: bool,
    /// `feature_id<TAB>beta` for the fit (the last path point with
    /// `--lambda-path`).
    #[arg(long)]
    pub beta: Option<PathBuf>,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct MtlassoArgs {
    /// Directory with one subdirectory per task holding `features.tsv` and
    /// `phenotype.tsv`.
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long, required_unless_present = "lambda_path")]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_path: bool,
    /// Directory receiving `beta_<task>.tsv` per task.
    #[arg(long)]
    pub beta_dir: Option<PathBuf>,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct CvArgs {
    #[arg(long)]
    pub method: Method,
    /// Single-task data.
    #[arg(long, requires = "phenotype", conflicts_with = "tasks")]
    pub features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    pub phenotype: Option<PathBuf>,
    /// Multi-task data (multi-scones, mtlasso); see `multi-scones --tasks`.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long)]
    pub gene_network: Option<PathBuf>,
    #[arg(long)]
    pub grid_eta: Option<Axis>,
    #[arg(long)]
    pub grid_lambda: Option<Axis>,
    #[arg(long)]
    pub grid_mu: Option<Axis>,
    #[arg(long)]
    pub grid_lambda1: Option<Axis>,
    #[arg(long)]
    pub grid_lambda2: Option<Axis>,
    #[arg(long)]
    pub grid_eta1: Option<Axis>,
    #[arg(long)]
    pub grid_eta2: Option<Axis>,
    #[arg(long, default_value_t = netguide::selectpipe::DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "product")]
    pub criterion: Criterion,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub module_size: usize,
    #[arg(long)]
    pub effect: f64,
    #[arg(long, default_value = "grid")]
    pub graph: GraphKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives `features.tsv`, `phenotype.tsv`, `network.tsv` and
    /// `planted.txt`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::BuildNetwork(a) => run::build_network(a),
        Command::GenePvals(a) => run::gene_pvals(a),
        Command::Modules(a) => run::modules(a),
        Command::Scones(a) => run::scones(a),
        Command::MultiScones(a) => run::multi_scones(a),
        Command::Lasso(a) => run::regression(netguide::netreg::PenaltyKind::Lasso, a),
        Command::Grace(a) => run::regression(netguide::netreg::PenaltyKind::Grace, a),
        Command::Gfl(a) => run::regression(netguide::netreg::PenaltyKind::Gfl, a),
        Command::Ogl(a) => run::regression(netguide::netreg::PenaltyKind::Ogl, a),
        Command::Gggl(a) => run::regression(netguide::netreg::PenaltyKind::Gggl, a),
        Command::Mtlasso(a) => run::mtlasso(a),
        Command::Cv(a) => run::cv(a),
        Command::Synth(a) => run::synth(a),
    }
}
