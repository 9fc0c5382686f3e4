//! `suppes`: command-line front end for the reconstruction library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use suppes_core::caprese::DEFAULT_LAMBDA;
use suppes_core::capri::ParamCount;
use suppes_core::sbcn::{DEFAULT_DAMPING, DEFAULT_WALKS};
use suppes_core::suppes::{DEFAULT_MIN_BOOT, DEFAULT_NBOOT, DEFAULT_PVALUE};
use suppes_core::synthgen::{DEFAULT_P_MAX, DEFAULT_P_MIN};
use suppes_core::{BootstrapKind, CapriParams, Regularizer, StructureKind, TreeSelection};

#[derive(Parser, Debug)]
#[command(name = "suppes", version, about = "Cancer progression reconstruction from cross-sectional data")]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, env = "SUPPES_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Report degenerate and duplicate columns; exits 2 if any are found.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Tree reconstruction. Writes model JSON and a DOT file beside it.
    Caprese(CapreseArgs),
    /// DAG reconstruction, one model per regularizer.
    Capri(CapriArgs),
    /// Edge and model confidence by resampling.
    Bootstrap(BootstrapArgs),
    /// Random ground truth and, optionally, data sampled from it.
    Synth(SynthArgs),
    /// Compare an inferred model against a reference.
    Eval {
        #[arg(long)]
        inferred: PathBuf,
        /// Model JSON or ground-truth JSON.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Suppes-Bayes causal network over a categorical table.
    Sbcn(SbcnArgs),
    /// Reconstruction accuracy over a grid of sample sizes and noise levels, as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct CapreseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "per-node")]
    pub selection: SelectionArg,
    /// Fit only consolidated columns instead of rejecting the input.
    #[arg(long)]
    pub lenient: bool,
    /// Model JSON path; the DOT file takes the same stem. `-` prints JSON only.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CapriOpts {
    /// JSON array of hypotheses.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PVALUE)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_NBOOT)]
    pub nboot: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_BOOT)]
    pub min_boot: usize,
    #[arg(long = "regularizer", value_enum, default_values = ["bic", "aic"])]
    pub regularizers: Vec<RegularizerArg>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Count 2^k - 1 parameters per node instead of 2^k.
    #[arg(long)]
    pub free_parameters: bool,
}

impl CapriOpts {
    pub fn params(&self, seed: u64) -> CapriParams {
        CapriParams {
            alpha: self.alpha,
            nboot: self.nboot,
            min_boot: self.min_boot,
            regularizers: self.regularizers.iter().map(|r| r.0).collect(),
            seed,
            max_iter: self.max_iter,
            restarts: self.restarts,
            param_count: if self.free_parameters {
                ParamCount::FreeParameters
            } else {
                ParamCount::PerConfiguration
            },
            ..CapriParams::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct CapriArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub opts: CapriOpts,
    /// Fit only consolidated columns instead of rejecting the input (no hypotheses).
    #[arg(long)]
    pub lenient: bool,
    /// Directory receiving `capri-<regularizer>.json` and `.dot`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long = "iterations", default_value_t = DEFAULT_NBOOT)]
    pub iterations: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[command(flatten)]
    pub capri: CapriOpts,
    /// Parametric only: generating model to resample from. Without it the
    /// model fitted to the input is used.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Parametric only: rows per resample; defaults to the input size.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub eps_plus: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps_minus: f64,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "tree")]
    pub kind: KindOfStructure,
    #[arg(long, default_value_t = 20)]
    pub events: usize,
    #[arg(long, default_value_t = 3)]
    pub max_parents: usize,
    #[arg(long, default_value_t = 1)]
    pub components: usize,
    #[arg(long, default_value_t = DEFAULT_P_MIN)]
    pub p_min: f64,
    #[arg(long, default_value_t = DEFAULT_P_MAX)]
    pub p_max: f64,
    #[arg(long)]
    pub disjunctive: bool,
    /// Rows to sample; 0 writes only the ground truth.
    #[arg(long, default_value_t = 0)]
    pub rows: usize,
    /// Uniform noise rate applied to sampled data.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub truth_out: PathBuf,
    #[arg(long)]
    pub data_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SbcnArgs {
    /// Categorical CSV with a header row. Omit to use the built-in Berkeley admissions table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// JSON object mapping attribute name to temporal level.
    #[arg(long)]
    pub order: Option<PathBuf>,
    #[arg(long, default_value = "Admission=No")]
    pub negative: String,
    #[arg(long, default_value = "Admission=Yes")]
    pub positive: String,
    /// Nodes to score, as `attribute=value`.
    #[arg(long = "group")]
    pub groups: Vec<String>,
    /// Mediator nodes for the explainable fraction, as `attribute=value`.
    #[arg(long = "mediator")]
    pub mediators: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_WALKS)]
    pub walks: usize,
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, value_enum, default_value = "bic")]
    pub regularizer: RegularizerArg,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "caprese")]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value = "tree")]
    pub kind: KindOfStructure,
    #[arg(long, default_value_t = 20)]
    pub events: usize,
    #[arg(long, default_value_t = 3)]
    pub max_parents: usize,
    #[arg(long, default_value_t = 1)]
    pub components: usize,
    #[arg(long, default_value_t = 10)]
    pub instances: usize,
    #[arg(long, default_value_t = 1)]
    pub datasets: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 150, 250])]
    pub rows: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0f64, 0.1])]
    pub noise: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "bic")]
    pub regularizer: RegularizerArg,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    PerNode,
    Edmonds,
}

impl From<SelectionArg> for TreeSelection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::PerNode => TreeSelection::PerNode,
            SelectionArg::Edmonds => TreeSelection::Edmonds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegularizerArg(pub Regularizer);

impl ValueEnum for RegularizerArg {
    fn value_variants<'a>() -> &'a [Self] {
        &[RegularizerArg(Regularizer::Bic), RegularizerArg(Regularizer::Aic)]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.0.name()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Caprese,
    Capri,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Nonparametric,
    Statistical,
    Parametric,
}

impl From<KindArg> for BootstrapKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nonparametric => BootstrapKind::Nonparametric,
            KindArg::Statistical => BootstrapKind::Statistical,
            KindArg::Parametric => BootstrapKind::Parametric,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindOfStructure {
    Tree,
    Forest,
    ConnectedDag,
    DisconnectedDag,
}

impl From<KindOfStructure> for StructureKind {
    fn from(k: KindOfStructure) -> Self {
        match k {
            KindOfStructure::Tree => StructureKind::Tree,
            KindOfStructure::Forest => StructureKind::Forest,
            KindOfStructure::ConnectedDag => StructureKind::ConnectedDag,
            KindOfStructure::DisconnectedDag => StructureKind::DisconnectedDag,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("suppes: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
