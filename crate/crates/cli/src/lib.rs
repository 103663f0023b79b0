//! Command-line driver for the algorithm-selection pipeline.
//!
//! Every subcommand writes machine-readable output to files and progress to
//! standard error. Exit codes: 0 success, 1 usage error, 2 data error,
//! 3 internal error.

pub mod commands;
pub mod config;
pub mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0:#}")]
    Data(#[from] anyhow::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mapf-select",
    version,
    about = "Learned MAPF solver selection from grid-graph embeddings"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Feature CSV written by `extract`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Runtime results CSV.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// JSON map from grid name to grid type.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Keep at most this many agent counts per scenario.
    #[arg(long)]
    pub agents_per_scenario: Option<usize>,
    /// Fail on results rows missing a portfolio solver.
    #[arg(long)]
    pub strict: bool,
}

/// Overrides for the embedding configuration.
#[derive(Debug, Args, Default)]
pub struct FeatherArgs {
    /// mean or max.
    #[arg(long)]
    pub pooling: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub eval_points: Option<usize>,
    #[arg(long)]
    pub theta_max: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SplitArgs {
    /// in_grid, in_grid_type or between_grid_type.
    #[arg(long)]
    pub setup: Option<String>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Held-out grid type for between_grid_type; repeatable.
    #[arg(long = "test-type")]
    pub test_types: Vec<String>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic benchmark with a planted selection rule.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        grids_per_type: Option<usize>,
        #[arg(long)]
        scenarios_per_grid: Option<usize>,
        #[arg(long)]
        agent_counts: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Compute feature vectors for every instance in a results CSV.
    Extract {
        #[arg(long)]
        maps: Option<PathBuf>,
        #[arg(long)]
        scens: Option<PathBuf>,
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        agents_per_scenario: Option<usize>,
        /// Output feature CSV (default: <output_dir>/features.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed one graph: an edge-list file or an encoded MAPF instance.
    Embed {
        /// Edge list: node count on the first line, then `u v` per line.
        #[arg(long, conflicts_with_all = ["map", "scen"])]
        graph: Option<PathBuf>,
        #[arg(long, requires_all = ["scen", "agents"])]
        map: Option<PathBuf>,
        #[arg(long)]
        scen: Option<PathBuf>,
        #[arg(long)]
        agents: Option<usize>,
        /// g2v or fg2v.
        #[arg(long, default_value = "g2v")]
        encoder: String,
        #[command(flatten)]
        feather: FeatherArgs,
        /// Output CSV: a header and one row of values.
        #[arg(long)]
        out: PathBuf,
    },
    /// The 20 named hand-crafted features of one MAPF instance as CSV.
    Features {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        scen: PathBuf,
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split, tune by cross-validation and train a selector.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        split: SplitArgs,
        /// Feature blocks: all, or e.g. kbs+g2v.
        #[arg(long)]
        subset: Option<String>,
        /// Output directory for model.json, cv.csv and split.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the fastest solver for every instance in a feature CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained selector and the baselines on a split's test set.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// split.json written by `train`.
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate one selector per feature subset.
    Ablate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses arguments and runs. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.cache_dir {
        config.paths.cache_dir = Some(dir.clone());
    }
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(|| commands::dispatch(cli.command, config)),
        None => commands::dispatch(cli.command, config),
    }
}
