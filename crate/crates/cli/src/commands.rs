use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mapf_select::benchmark::{
    load_results, parse_map, parse_scen, GridMap, InstanceKey, RuntimeRecord, ScenarioEntry,
};
use mapf_select::encode::{EncodedGraph, Encoder};
use mapf_select::eval::{
    derive_labels, make_split, single_best_policy, training_set, EvalReport, GridTaxonomy,
    GridType, LabeledInstance, ModelPolicy, Oracle, Policy, Split, SplitSpec,
};
use mapf_select::feather::embed_graph;
use mapf_select::gbdt::{self, GbdtModel, HyperGrid, TuneReport};
use mapf_select::kbs::{kbs_features, KBS_FEATURE_NAMES};
use mapf_select::mapf::MapfInstance;
use mapf_select::pipeline::{
    extract, write_atomic, FeatureCache, FeatureStore, FeatureSubset, Layout,
};

use crate::config::RunConfig;
use crate::synth;
use crate::{CliError, Command, DataArgs, FeatherArgs, SplitArgs};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command, mut config: RunConfig) -> Result<()> {
    match command {
        Command::Synth {
            out,
            grids_per_type,
            scenarios_per_grid,
            agent_counts,
            noise,
        } => {
            let s = &mut config.synth;
            s.grids_per_type = grids_per_type.unwrap_or(s.grids_per_type);
            s.scenarios_per_grid = scenarios_per_grid.unwrap_or(s.scenarios_per_grid);
            s.agent_counts_per_scenario = agent_counts.unwrap_or(s.agent_counts_per_scenario);
            s.noise = noise.unwrap_or(s.noise);
            config.validate()?;
            cmd_synth(&config, &out)
        }
        Command::Extract {
            maps,
            scens,
            results,
            agents_per_scenario,
            out,
        } => {
            set(&mut config.paths.maps_dir, maps);
            set(&mut config.paths.scens_dir, scens);
            set(&mut config.paths.results, results);
            if agents_per_scenario.is_some() {
                config.agents_per_scenario = agents_per_scenario;
            }
            config.validate()?;
            let out = out.unwrap_or_else(|| config.output_dir().join("features.csv"));
            cmd_extract(&config, &out).map(|_| ())
        }
        Command::Embed {
            graph,
            map,
            scen,
            agents,
            encoder,
            feather,
            out,
        } => {
            apply_feather(&mut config, feather)?;
            config.validate()?;
            cmd_embed(&config, graph, map, scen, agents, &encoder, &out)
        }
        Command::Features {
            map,
            scen,
            agents,
            out,
        } => {
            config.validate()?;
            cmd_features(&map, &scen, agents, &out)
        }
        Command::Train {
            data,
            split,
            subset,
            out,
        } => {
            apply_data(&mut config, data);
            apply_split(&mut config, split)?;
            if let Some(s) = subset {
                config.subset = s;
            }
            set(&mut config.paths.output_dir, out);
            config.validate()?;
            cmd_train(&config).map(|_| ())
        }
        Command::Predict {
            model,
            features,
            out,
        } => {
            config.validate()?;
            cmd_predict(&model, &features, &out, &config)
        }
        Command::Evaluate {
            data,
            model,
            split,
            out,
        } => {
            apply_data(&mut config, data);
            set(&mut config.paths.output_dir, out);
            config.validate()?;
            cmd_evaluate(&config, &model, &split).map(|_| ())
        }
        Command::Ablate { data, split, out } => {
            apply_data(&mut config, data);
            apply_split(&mut config, split)?;
            set(&mut config.paths.output_dir, out);
            config.validate()?;
            cmd_ablate(&config).map(|_| ())
        }
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn apply_data(config: &mut RunConfig, data: DataArgs) {
    set(&mut config.paths.features, data.features);
    set(&mut config.paths.results, data.results);
    set(&mut config.paths.taxonomy, data.taxonomy);
    if data.agents_per_scenario.is_some() {
        config.agents_per_scenario = data.agents_per_scenario;
    }
    config.strict |= data.strict;
}

fn apply_feather(config: &mut RunConfig, args: FeatherArgs) -> Result<()> {
    if let Some(p) = args.pooling {
        config.feather.pooling = p.parse().map_err(CliError::Usage)?;
    }
    set_value(&mut config.feather.order, args.order);
    set_value(&mut config.feather.eval_points, args.eval_points);
    set_value(&mut config.feather.theta_max, args.theta_max);
    Ok(())
}

fn set_value<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_split(config: &mut RunConfig, split: SplitArgs) -> Result<()> {
    if let Some(s) = split.setup {
        config.split.setup = s.parse().map_err(CliError::Usage)?;
    }
    if let Some(f) = split.test_fraction {
        config.split.test_fraction = f;
    }
    if !split.test_types.is_empty() {
        config.split.test_types = split
            .test_types
            .iter()
            .map(|t| t.parse::<GridType>())
            .collect::<std::result::Result<_, _>>()
            .map_err(CliError::Usage)?;
    }
    if let Some(k) = split.folds {
        config.folds = k;
    }
    Ok(())
}

/// A required path that must exist.
fn existing(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    let path = path
        .clone()
        .ok_or_else(|| CliError::Usage(format!("missing required input --{flag}")))?;
    if !path.exists() {
        return Err(CliError::Data(anyhow!("{} does not exist", path.display())));
    }
    Ok(path)
}

fn check_exists(path: &Path) -> Result<()> {
    existing(&Some(path.to_path_buf()), "")?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn stage(name: &str, started: Instant) {
    log::info!("{name} done in {:.2}s", started.elapsed().as_secs_f64());
}

// ---------------------------------------------------------------- synth

fn cmd_synth(config: &RunConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let portfolio = config.portfolio();
    let bench = synth::generate(&config.synth, &portfolio, config.seed)?;
    bench.write(out, &portfolio)?;
    log::info!(
        "synth: {} grids, {} scenarios, {} instances written to {}",
        bench.grids.len(),
        bench.scenarios.len(),
        bench.records.len(),
        out.display()
    );
    stage("synth", started);
    Ok(())
}

// -------------------------------------------------------------- loading

/// Keeps at most `n` agent counts per (grid, scenario), chosen by seeded
/// shuffle; the original order of the kept records is preserved.
pub fn subsample_agents(records: Vec<RuntimeRecord>, n: usize, seed: u64) -> Vec<RuntimeRecord> {
    let mut groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.key.grid.clone(), r.key.scenario.clone()))
            .or_default()
            .push(r.key.num_agents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = std::collections::HashSet::new();
    for ((grid, scen), mut counts) in groups {
        counts.sort_unstable();
        counts.dedup();
        counts.shuffle(&mut rng);
        for k in counts.into_iter().take(n) {
            keep.insert(InstanceKey::new(grid.clone(), scen.clone(), k));
        }
    }
    records
        .into_iter()
        .filter(|r| keep.contains(&r.key))
        .collect()
}

fn load_records(config: &RunConfig) -> Result<Vec<RuntimeRecord>> {
    let path = existing(&config.paths.results, "results")?;
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let records = load_results(&bytes, &config.portfolio(), config.strict)
        .with_context(|| format!("results file {}", path.display()))?;
    if records.is_empty() {
        return Err(CliError::Data(anyhow!(
            "results file {} has no rows",
            path.display()
        )));
    }
    Ok(match config.agents_per_scenario {
        Some(n) => subsample_agents(records, n, config.seed),
        None => records,
    })
}

fn load_taxonomy(config: &RunConfig) -> Result<GridTaxonomy> {
    match &config.paths.taxonomy {
        None => Ok(GridTaxonomy::new()),
        Some(path) => {
            check_exists(path)?;
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(GridTaxonomy::from_json(&text)
                .with_context(|| format!("taxonomy {}", path.display()))?)
        }
    }
}

fn load_features(path: &Path) -> Result<FeatureStore> {
    check_exists(path)?;
    Ok(FeatureStore::read(path).with_context(|| format!("feature file {}", path.display()))?)
}

fn load_labeled(config: &RunConfig) -> Result<(Layout, Vec<LabeledInstance>)> {
    let features_path = existing(&config.paths.features, "features")?;
    existing(&config.paths.results, "results")?;
    let taxonomy = load_taxonomy(config)?;
    let store = load_features(&features_path)?;
    let records = load_records(config)?;
    let data = derive_labels(&records, &store, &config.portfolio(), &taxonomy)
        .context("labelling instances")?;
    log::info!("{} labelled instances", data.len());
    Ok((*store.layout(), data))
}

fn load_map(path: &Path) -> Result<GridMap> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Usage(format!("bad map path {}", path.display())))?;
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_map(name, &bytes).with_context(|| format!("map file {}", path.display()))?)
}

fn load_scen(path: &Path, grid: &GridMap) -> Result<Vec<ScenarioEntry>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_scen(&bytes, grid).with_context(|| format!("scenario file {}", path.display()))?)
}

fn load_instance(map: &Path, scen: &Path, agents: usize) -> Result<MapfInstance> {
    check_exists(map)?;
    check_exists(scen)?;
    let grid = Arc::new(load_map(map)?);
    let entries = load_scen(scen, &grid)?;
    Ok(MapfInstance::from_scenario(grid, &entries, agents)
        .with_context(|| format!("{} with {agents} agents", scen.display()))?)
}

// -------------------------------------------------------------- extract

/// Returns the features of every instance in the results file.
pub fn cmd_extract(config: &RunConfig, out: &Path) -> Result<FeatureStore> {
    let maps = existing(&config.paths.maps_dir, "maps")?;
    let scens = existing(&config.paths.scens_dir, "scens")?;
    let records = load_records(config)?;
    let started = Instant::now();
    let cache_dir = config.cache_dir();
    let mut cache = FeatureCache::open(&cache_dir, &config.feather)
        .with_context(|| format!("opening cache in {}", cache_dir.display()))?;
    let keys: Vec<InstanceKey> = records.iter().map(|r| r.key.clone()).collect();
    let missing: Vec<&InstanceKey> = keys.iter().filter(|k| cache.get(k).is_none()).collect();
    log::info!(
        "extract: {} instances, {} cached",
        keys.len(),
        keys.len() - missing.len()
    );

    let mut grids: HashMap<&str, Arc<GridMap>> = HashMap::new();
    let mut scenarios: HashMap<(&str, &str), Arc<Vec<ScenarioEntry>>> = HashMap::new();
    for key in &missing {
        if !grids.contains_key(key.grid.as_str()) {
            let path = maps.join(format!("{}.map", key.grid));
            check_exists(&path)?;
            grids.insert(&key.grid, Arc::new(load_map(&path)?));
        }
        let pair = (key.grid.as_str(), key.scenario.as_str());
        if !scenarios.contains_key(&pair) {
            let path = scens.join(format!("{}.scen", key.scenario));
            check_exists(&path)?;
            scenarios.insert(pair, Arc::new(load_scen(&path, &grids[key.grid.as_str()])?));
        }
    }

    let done = std::sync::atomic::AtomicUsize::new(0);
    let total = missing.len();
    for chunk in missing.chunks(256) {
        let vectors = chunk
            .par_iter()
            .map(|key| {
                let grid = grids[key.grid.as_str()].clone();
                let entries = &scenarios[&(key.grid.as_str(), key.scenario.as_str())];
                let instance = MapfInstance::from_scenario(grid, entries, key.num_agents)
                    .map_err(|e| anyhow!("instance {key}: {e}"))?;
                Ok(extract(&instance, (*key).clone(), &config.feather))
            })
            .collect::<std::result::Result<Vec<_>, anyhow::Error>>()?;
        for v in vectors {
            cache.insert(v);
        }
        let n = done.fetch_add(chunk.len(), std::sync::atomic::Ordering::Relaxed) + chunk.len();
        log::info!(
            "extract: {n}/{total} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
    }
    cache
        .flush()
        .with_context(|| format!("writing cache {}", cache.path().display()))?;
    let store = cache.store().subset(&keys);
    store
        .write(out)
        .with_context(|| format!("writing {}", out.display()))?;
    log::info!("extract: wrote {} rows to {}", store.len(), out.display());
    stage("extract", started);
    Ok(store)
}

// ------------------------------------------------------ embed, features

fn cmd_embed(
    config: &RunConfig,
    graph: Option<PathBuf>,
    map: Option<PathBuf>,
    scen: Option<PathBuf>,
    agents: Option<usize>,
    encoder: &str,
    out: &Path,
) -> Result<()> {
    let encoded = match (graph, map, scen, agents) {
        (Some(path), None, None, _) => {
            check_exists(&path)?;
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            EncodedGraph::from_edge_list(&text)
                .with_context(|| format!("graph file {}", path.display()))?
        }
        (None, Some(map), Some(scen), Some(k)) => {
            let encoder: Encoder =
                serde_json::from_value(serde_json::Value::String(encoder.to_ascii_lowercase()))
                    .map_err(|_| {
                        CliError::Usage(format!("unknown encoder `{encoder}`; use g2v or fg2v"))
                    })?;
            encoder.encode(&load_instance(&map, &scen, k)?)
        }
        _ => {
            return Err(CliError::Usage(
                "give either --graph, or --map, --scen and --agents".into(),
            ))
        }
    };
    let embedding = embed_graph(&encoded, &config.feather);
    log::info!(
        "embed: {} nodes, {} edges, {} dimensions",
        encoded.num_nodes(),
        encoded.num_edges(),
        embedding.values.len()
    );
    let header: Vec<String> = (0..embedding.values.len())
        .map(|i| format!("e{i}"))
        .collect();
    let row: Vec<String> = embedding.values.iter().map(|v| format!("{v:?}")).collect();
    write_file(out, &format!("{}\n{}\n", header.join(","), row.join(",")))
}

fn cmd_features(map: &Path, scen: &Path, agents: usize, out: &Path) -> Result<()> {
    let instance = load_instance(map, scen, agents)?;
    let features = kbs_features(&instance);
    let row: Vec<String> = features.values.iter().map(|v| format!("{v:?}")).collect();
    write_file(
        out,
        &format!("{}\n{}\n", KBS_FEATURE_NAMES.join(","), row.join(",")),
    )
}

// ---------------------------------------------------------------- train

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub spec: SplitSpec,
    pub train: Vec<InstanceKey>,
    pub test: Vec<InstanceKey>,
}

impl SplitFile {
    fn new(spec: SplitSpec, data: &[LabeledInstance], split: &Split) -> Self {
        Self {
            spec,
            train: split.train.iter().map(|&i| data[i].key.clone()).collect(),
            test: split.test.iter().map(|&i| data[i].key.clone()).collect(),
        }
    }

    /// Indices of the recorded keys within `data`.
    fn resolve(&self, data: &[LabeledInstance]) -> Result<Split> {
        let index: HashMap<&InstanceKey, usize> =
            data.iter().enumerate().map(|(i, d)| (&d.key, i)).collect();
        let find = |keys: &[InstanceKey]| -> Result<Vec<usize>> {
            let mut out = keys
                .iter()
                .map(|k| {
                    index.get(k).copied().ok_or_else(|| {
                        CliError::Data(anyhow!("split instance {k} has no labelled data"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.sort_unstable();
            Ok(out)
        };
        Ok(Split {
            train: find(&self.train)?,
            test: find(&self.test)?,
        })
    }
}

pub fn model_name(subset: &FeatureSubset) -> String {
    format!("GBDT[{}]", subset.label())
}

/// Tunes on the training indices, then fits the final model.
pub fn fit_selector(
    config: &RunConfig,
    data: &[LabeledInstance],
    train_idx: &[usize],
    subset: FeatureSubset,
    layout: &Layout,
    grid: &HyperGrid,
) -> Result<(GbdtModel, TuneReport)> {
    let started = Instant::now();
    let portfolio = config.portfolio();
    let columns = subset.columns(layout);
    let set = training_set(data, train_idx, &columns, portfolio.len())
        .context("building the training set")?;
    log::info!(
        "{}: {} training rows, {} features, {} grid points × {} folds",
        model_name(&subset),
        set.len(),
        columns.len(),
        grid.len(),
        config.folds
    );
    let report = gbdt::tune(&set, grid, config.folds, config.seed).context("cross-validation")?;
    let best = report
        .results
        .iter()
        .find(|r| r.params == report.best)
        .ok_or_else(|| CliError::Internal("best grid point missing from its report".into()))?;
    log::info!(
        "{}: best CV accuracy {:.4} with {:?}",
        model_name(&subset),
        best.mean_accuracy,
        report.best
    );
    let names = layout.feature_names();
    let model = gbdt::train(&set, &report.best, config.seed)
        .context("training")?
        .with_names(
            portfolio.names().to_vec(),
            columns.iter().map(|&c| names[c].clone()).collect(),
        );
    stage(&format!("{} fit", model_name(&subset)), started);
    Ok((model, report))
}

pub struct TrainOutput {
    pub model: GbdtModel,
    pub tune: TuneReport,
    pub split: SplitFile,
}

pub fn cmd_train(config: &RunConfig) -> Result<TrainOutput> {
    let out = config.output_dir();
    let (layout, data) = load_labeled(config)?;
    let subset = config.subset()?;
    let spec = config.split_spec();
    let split = make_split(&data, &spec).context("splitting")?;
    log::info!(
        "{} split: {} train, {} test",
        spec.setup,
        split.train.len(),
        split.test.len()
    );
    let (model, tune) = fit_selector(config, &data, &split.train, subset, &layout, &config.grid)?;
    let split_file = SplitFile::new(spec, &data, &split);
    write_file(&out.join("model.json"), &model.to_json())?;
    write_file(&out.join("cv.csv"), &tune.to_csv())?;
    write_file(
        &out.join("split.json"),
        &serde_json::to_string_pretty(&split_file).context("serializing split")?,
    )?;
    log::info!(
        "train: wrote model.json, cv.csv and split.json to {}",
        out.display()
    );
    Ok(TrainOutput {
        model,
        tune,
        split: split_file,
    })
}

// --------------------------------------------------- predict, evaluate

fn load_model(path: &Path) -> Result<GbdtModel> {
    check_exists(path)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GbdtModel::from_json(&text).with_context(|| format!("model file {}", path.display()))?)
}

/// Columns of the feature layout the model reads, and the subset they form.
fn model_columns(
    model: &GbdtModel,
    layout: &Layout,
) -> Result<(Vec<usize>, Option<FeatureSubset>)> {
    let names = layout.feature_names();
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let columns = model
        .feature_names
        .iter()
        .map(|n| {
            index.get(n.as_str()).copied().ok_or_else(|| {
                CliError::Data(anyhow!("model feature `{n}` is not in the feature file"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let subset = FeatureSubset::ablation_set()
        .into_iter()
        .find(|s| s.columns(layout) == columns);
    Ok((columns, subset))
}

fn model_policy(model: GbdtModel, layout: &Layout) -> Result<ModelPolicy> {
    let (columns, subset) = model_columns(&model, layout)?;
    let name = subset.map_or_else(|| "GBDT".to_string(), |s| model_name(&s));
    ModelPolicy::new(name, model, columns).map_err(|e| CliError::Internal(e.to_string()))
}

fn cmd_predict(model_path: &Path, features: &Path, out: &Path, config: &RunConfig) -> Result<()> {
    let model = load_model(model_path)?;
    let store = load_features(features)?;
    let (columns, _) = model_columns(&model, store.layout())?;
    let rows: Vec<(&InstanceKey, &Arc<[f64]>)> = store.iter().collect();
    let predictions = rows
        .par_iter()
        .map(|(_, v)| {
            let x: Vec<f64> = columns.iter().map(|&c| v[c]).collect();
            model.predict(&x)
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut text = String::from("grid,scenario,num_agents,solver");
    for c in &model.class_names {
        let _ = write!(text, ",p_{c}");
    }
    text.push('\n');
    for ((key, _), p) in rows.iter().zip(&predictions) {
        let _ = write!(
            text,
            "{},{},{},{}",
            key.grid, key.scenario, key.num_agents, model.class_names[p.class]
        );
        for q in &p.probabilities {
            let _ = write!(text, ",{q:.6}");
        }
        text.push('\n');
    }
    write_file(out, &text)?;
    log::info!(
        "predict: {} rows written to {} (seed {})",
        rows.len(),
        out.display(),
        config.seed
    );
    Ok(())
}

fn write_report(out: &Path, stem: &str, report: &EvalReport) -> Result<()> {
    write_file(&out.join(format!("{stem}.csv")), &report.to_csv())?;
    write_file(&out.join(format!("{stem}.json")), &report.to_json())
}

pub fn cmd_evaluate(
    config: &RunConfig,
    model_path: &Path,
    split_path: &Path,
) -> Result<EvalReport> {
    let model = load_model(model_path)?;
    check_exists(split_path)?;
    let split_text = fs::read_to_string(split_path)
        .with_context(|| format!("reading {}", split_path.display()))?;
    let split_file: SplitFile = serde_json::from_str(&split_text)
        .with_context(|| format!("split file {}", split_path.display()))?;
    let (layout, data) = load_labeled(config)?;
    let split = split_file.resolve(&data)?;
    let train: Vec<LabeledInstance> = split.train.iter().map(|&i| data[i].clone()).collect();
    let test: Vec<LabeledInstance> = split.test.iter().map(|&i| data[i].clone()).collect();
    let single_best = single_best_policy(&train).context("single-best baseline")?;
    let selector = model_policy(model, &layout)?;
    let report =
        EvalReport::build(&[&Oracle, &single_best, &selector], &test).context("evaluating")?;
    let out = config.output_dir();
    write_report(&out, "report", &report)?;
    log_summary(&report);
    Ok(report)
}

fn log_summary(report: &EvalReport) {
    for row in report
        .rows
        .iter()
        .filter(|r| r.group == "all" || r.group == "avg")
    {
        let m = &row.metrics;
        log::info!(
            "{:<22} {:<3} Acc {:.3}  Cov {:.3}  RT {:.3}  %Rg {:.1}",
            row.method,
            row.group,
            m.acc,
            m.cov,
            m.rt,
            m.regret
        );
    }
}

// --------------------------------------------------------------- ablate

pub fn cmd_ablate(config: &RunConfig) -> Result<EvalReport> {
    let out = config.output_dir();
    let (layout, data) = load_labeled(config)?;
    let spec = config.split_spec();
    let split = make_split(&data, &spec).context("splitting")?;
    let train: Vec<LabeledInstance> = split.train.iter().map(|&i| data[i].clone()).collect();
    let test: Vec<LabeledInstance> = split.test.iter().map(|&i| data[i].clone()).collect();
    let single_best = single_best_policy(&train).context("single-best baseline")?;
    let mut policies: Vec<Box<dyn Policy>> = vec![Box::new(Oracle), Box::new(single_best)];
    let mut cv = String::new();
    for subset in FeatureSubset::ablation_set() {
        let (model, tune) =
            fit_selector(config, &data, &split.train, subset, &layout, &config.grid)?;
        for (i, line) in tune.to_csv().lines().enumerate() {
            if i == 0 && cv.is_empty() {
                let _ = writeln!(cv, "subset,{line}");
            } else if i > 0 {
                let _ = writeln!(cv, "{},{line}", subset.label());
            }
        }
        policies.push(Box::new(model_policy(model, &layout)?));
    }
    let refs: Vec<&dyn Policy> = policies.iter().map(|p| p.as_ref()).collect();
    let report = EvalReport::build(&refs, &test).context("evaluating")?;
    write_report(&out, "ablation", &report)?;
    write_file(&out.join("ablation_cv.csv"), &cv)?;
    write_file(
        &out.join("split.json"),
        &serde_json::to_string_pretty(&SplitFile::new(spec, &data, &split))
            .context("serializing split")?,
    )?;
    log_summary(&report);
    Ok(report)
}
