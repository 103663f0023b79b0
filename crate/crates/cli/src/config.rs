//! The JSON run configuration. Every field is optional; command-line flags
//! override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mapf_select::benchmark::Portfolio;
use mapf_select::eval::{GridType, Setup, SplitSpec};
use mapf_select::feather::FeatherConfig;
use mapf_select::gbdt::HyperGrid;
use mapf_select::pipeline::FeatureSubset;

use crate::synth::SynthConfig;
use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub maps_dir: Option<PathBuf>,
    pub scens_dir: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub setup: Setup,
    pub test_fraction: f64,
    pub test_types: Vec<GridType>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            setup: Setup::InGrid,
            test_fraction: 0.2,
            test_types: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub feather: FeatherConfig,
    /// `all`, or blocks joined by `+`, e.g. `kbs+g2v`.
    pub subset: String,
    pub split: SplitConfig,
    pub grid: HyperGrid,
    pub folds: usize,
    pub seed: u64,
    /// Keep at most this many agent counts per scenario.
    pub agents_per_scenario: Option<usize>,
    pub portfolio: Vec<String>,
    /// Reject results rows missing a portfolio solver instead of treating it as unsolved.
    pub strict: bool,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            feather: FeatherConfig::default(),
            subset: "all".into(),
            split: SplitConfig::default(),
            grid: HyperGrid::default(),
            folds: 4,
            seed: 0,
            agents_per_scenario: None,
            portfolio: Portfolio::default().names().to_vec(),
            strict: false,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Checks values that do not depend on the file system.
    pub fn validate(&self) -> Result<(), CliError> {
        self.feather
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.subset()?;
        if self.folds < 2 {
            return Err(CliError::Usage("folds must be at least 2".into()));
        }
        if self.grid.is_empty() {
            return Err(CliError::Usage("hyperparameter grid is empty".into()));
        }
        if self.portfolio.is_empty() {
            return Err(CliError::Usage("portfolio is empty".into()));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(CliError::Usage("test_fraction must lie in (0, 1)".into()));
        }
        if self.agents_per_scenario == Some(0) {
            return Err(CliError::Usage(
                "agents_per_scenario must be positive".into(),
            ));
        }
        self.synth.validate().map_err(CliError::Usage)
    }

    pub fn subset(&self) -> Result<FeatureSubset, CliError> {
        self.subset
            .parse()
            .map_err(|e: mapf_select::pipeline::PipelineError| CliError::Usage(e.to_string()))
    }

    pub fn portfolio(&self) -> Portfolio {
        Portfolio::new(self.portfolio.iter().cloned())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            setup: self.split.setup,
            seed: self.seed,
            test_fraction: self.split.test_fraction,
            test_types: self.split.test_types.clone(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.paths
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.output_dir().join("cache"))
    }
}
