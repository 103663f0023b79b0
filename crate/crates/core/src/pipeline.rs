//! The per-instance feature vector: 20 hand-crafted features followed by the
//! G2V and FG2V graph embeddings, plus a CSV-backed feature store.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::InstanceKey;
use crate::encode::{encode_fg2v, encode_g2v};
use crate::feather::{embed_graph, FeatherConfig};
use crate::kbs::{kbs_features, KBS_DIM, KBS_FEATURE_NAMES};
use crate::mapf::MapfInstance;

/// One of the three feature blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    Kbs,
    G2v,
    Fg2v,
}

/// Block offsets within a full vector for an embedding of dimension `embed_dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub embed_dim: usize,
}

impl Layout {
    pub fn new(config: &FeatherConfig) -> Self {
        Self {
            embed_dim: config.dimension(),
        }
    }

    pub fn total(&self) -> usize {
        KBS_DIM + 2 * self.embed_dim
    }

    pub fn range(&self, block: Block) -> std::ops::Range<usize> {
        match block {
            Block::Kbs => 0..KBS_DIM,
            Block::G2v => KBS_DIM..KBS_DIM + self.embed_dim,
            Block::Fg2v => KBS_DIM + self.embed_dim..self.total(),
        }
    }

    /// Column names: the KBS names, then `g2v_<i>` and `fg2v_<i>`.
    pub fn feature_names(&self) -> Vec<String> {
        KBS_FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain((0..self.embed_dim).map(|i| format!("g2v_{i}")))
            .chain((0..self.embed_dim).map(|i| format!("fg2v_{i}")))
            .collect()
    }
}

impl Default for Layout {
    fn default() -> Self {
        Self::new(&FeatherConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub key: InstanceKey,
    pub values: Arc<[f64]>,
}

/// Which blocks a selector sees. At least one block is enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub kbs: bool,
    pub g2v: bool,
    pub fg2v: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("a feature subset must enable at least one block")]
    EmptySubset,
    #[error("unknown feature block `{0}` (expected kbs, g2v or fg2v)")]
    UnknownBlock(String),
    #[error("feature matrix: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature matrix: {0}")]
    Io(#[from] io::Error),
    #[error("feature matrix line {line}: {message}")]
    Format { line: u64, message: String },
}

impl FeatureSubset {
    pub const ALL: Self = Self {
        kbs: true,
        g2v: true,
        fg2v: true,
    };

    pub fn new(kbs: bool, g2v: bool, fg2v: bool) -> Result<Self, PipelineError> {
        if !(kbs || g2v || fg2v) {
            return Err(PipelineError::EmptySubset);
        }
        Ok(Self { kbs, g2v, fg2v })
    }

    /// The seven non-empty subsets in ablation order.
    pub fn ablation_set() -> [Self; 7] {
        let s = |kbs, g2v, fg2v| Self { kbs, g2v, fg2v };
        [
            s(true, false, false),
            s(false, true, false),
            s(false, false, true),
            s(false, true, true),
            s(true, true, false),
            s(true, false, true),
            s(true, true, true),
        ]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> {
        [
            (self.kbs, Block::Kbs),
            (self.g2v, Block::G2v),
            (self.fg2v, Block::Fg2v),
        ]
        .into_iter()
        .filter_map(|(on, b)| on.then_some(b))
    }

    pub fn dimension(&self, layout: &Layout) -> usize {
        self.blocks().map(|b| layout.range(b).len()).sum()
    }

    /// Full-vector indices of the selected columns, in canonical order.
    pub fn columns(&self, layout: &Layout) -> Vec<usize> {
        self.blocks().flat_map(|b| layout.range(b)).collect()
    }

    /// Display name such as `KBS+G2V`.
    pub fn label(&self) -> String {
        let parts: Vec<&str> = [(self.kbs, "KBS"), (self.g2v, "G2V"), (self.fg2v, "FG2V")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        parts.join("+")
    }
}

impl std::str::FromStr for FeatureSubset {
    type Err = PipelineError;

    /// Parses `all` or a `+`/`,` separated list of `kbs`, `g2v`, `fg2v`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        let (mut kbs, mut g2v, mut fg2v) = (false, false, false);
        for part in s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "kbs" => kbs = true,
                "g2v" => g2v = true,
                "fg2v" => fg2v = true,
                _ => return Err(PipelineError::UnknownBlock(part.to_string())),
            }
        }
        Self::new(kbs, g2v, fg2v)
    }
}

/// Concatenates the KBS features and the two graph embeddings.
pub fn extract(instance: &MapfInstance, key: InstanceKey, config: &FeatherConfig) -> FeatureVector {
    let layout = Layout::new(config);
    let mut values = Vec::with_capacity(layout.total());
    values.extend_from_slice(&kbs_features(instance).values);
    values.extend(embed_graph(&encode_g2v(instance), config).values);
    values.extend(embed_graph(&encode_fg2v(instance), config).values);
    debug_assert_eq!(values.len(), layout.total());
    FeatureVector {
        key,
        values: values.into(),
    }
}

/// Extracts many instances in parallel; output order follows input order.
pub fn extract_batch(
    items: &[(InstanceKey, MapfInstance)],
    config: &FeatherConfig,
) -> Vec<FeatureVector> {
    items
        .par_iter()
        .map(|(key, inst)| extract(inst, key.clone(), config))
        .collect()
}

/// The enabled blocks of `values`, concatenated in canonical order.
pub fn select_blocks(values: &[f64], subset: FeatureSubset, layout: &Layout) -> Vec<f64> {
    subset
        .blocks()
        .flat_map(|b| values[layout.range(b)].iter().copied())
        .collect()
}

/// Feature vectors keyed by instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureStore {
    layout: Layout,
    rows: BTreeMap<InstanceKey, Arc<[f64]>>,
}

impl FeatureStore {
    pub fn new(layout: Layout) -> Self {
        Self {
            layout,
            rows: BTreeMap::new(),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: &InstanceKey) -> Option<&Arc<[f64]>> {
        self.rows.get(key)
    }

    pub fn contains(&self, key: &InstanceKey) -> bool {
        self.rows.contains_key(key)
    }

    pub fn insert(&mut self, vector: FeatureVector) {
        assert_eq!(
            vector.values.len(),
            self.layout.total(),
            "feature length mismatch"
        );
        self.rows.insert(vector.key, vector.values);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&InstanceKey, &Arc<[f64]>)> {
        self.rows.iter()
    }

    /// Rows for `keys`, in that order, as a new store.
    pub fn subset<'a>(&self, keys: impl IntoIterator<Item = &'a InstanceKey>) -> Self {
        let mut out = Self::new(self.layout);
        for k in keys {
            if let Some(v) = self.rows.get(k) {
                out.rows.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// CSV with header `grid,scenario,num_agents,f0,...`, rows sorted by key.
    /// Values are written in shortest round-trip form, so reading the file
    /// back reproduces every bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("grid,scenario,num_agents");
        for i in 0..self.layout.total() {
            let _ = write!(out, ",f{i}");
        }
        out.push('\n');
        for (key, values) in &self.rows {
            let _ = write!(
                out,
                "{},{},{}",
                csv_field(&key.grid),
                csv_field(&key.scenario),
                key.num_agents
            );
            for v in values.iter() {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, PipelineError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
        let header = reader.headers()?.clone();
        let dims = header.len().saturating_sub(3);
        if header.len() < 4
            || &header[0] != "grid"
            || &header[1] != "scenario"
            || &header[2] != "num_agents"
        {
            return Err(PipelineError::Format {
                line: 1,
                message: "header must start with grid,scenario,num_agents".into(),
            });
        }
        if (dims - KBS_DIM) % 2 != 0 || dims < KBS_DIM + 2 {
            return Err(PipelineError::Format {
                line: 1,
                message: format!("{dims} feature columns do not form a 20 + 2·D layout"),
            });
        }
        let mut store = Self::new(Layout {
            embed_dim: (dims - KBS_DIM) / 2,
        });
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| PipelineError::Format { line, message };
            let num_agents = record[2]
                .parse::<usize>()
                .map_err(|_| bad(format!("num_agents `{}` is not an integer", &record[2])))?;
            let values = record
                .iter()
                .skip(3)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| bad(format!("`{f}` is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(bad("features must be finite".into()));
            }
            store.insert(FeatureVector {
                key: InstanceKey::new(&record[0], &record[1], num_agents),
                values: values.into(),
            });
        }
        Ok(store)
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        Self::from_csv(&fs::read(path)?)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes through a temporary sibling file and renames it into place, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// An on-disk feature cache: one CSV per embedding configuration.
#[derive(Debug)]
pub struct FeatureCache {
    path: PathBuf,
    store: FeatureStore,
    dirty: bool,
}

impl FeatureCache {
    /// Opens (or starts) the cache file for `config` inside `dir`.
    pub fn open(dir: &Path, config: &FeatherConfig) -> Result<Self, PipelineError> {
        let path = dir.join(format!("features-{}.csv", config.fingerprint()));
        let store = if path.exists() {
            let store = FeatureStore::read(&path)?;
            if store.layout() != &Layout::new(config) {
                log::warn!("ignoring cache {} with a different layout", path.display());
                FeatureStore::new(Layout::new(config))
            } else {
                store
            }
        } else {
            FeatureStore::new(Layout::new(config))
        };
        Ok(Self {
            path,
            store,
            dirty: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &InstanceKey) -> Option<&Arc<[f64]>> {
        self.store.get(key)
    }

    pub fn insert(&mut self, vector: FeatureVector) {
        self.store.insert(vector);
        self.dirty = true;
    }

    pub fn store(&self) -> &FeatureStore {
        &self.store
    }

    /// Persists new entries. A concurrent writer can lose entries but never
    /// corrupt the file.
    pub fn flush(&mut self) -> io::Result<()> {
        if self.dirty {
            self.store.write(&self.path)?;
            self.dirty = false;
        }
        Ok(())
    }
}
