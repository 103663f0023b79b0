use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, GridType, LabeledInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    /// Train and test instances come from the same grids.
    InGrid,
    /// Test grids are unseen, but every test grid type is seen in training.
    InGridType,
    /// Test grid types are absent from training.
    BetweenGridType,
}

impl std::str::FromStr for Setup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "in_grid" => Ok(Setup::InGrid),
            "in_grid_type" => Ok(Setup::InGridType),
            "between_grid_type" => Ok(Setup::BetweenGridType),
            _ => Err(format!("unknown split setup `{s}`")),
        }
    }
}

impl std::fmt::Display for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setup::InGrid => "in_grid",
            Setup::InGridType => "in_grid_type",
            Setup::BetweenGridType => "between_grid_type",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub setup: Setup,
    pub seed: u64,
    pub test_fraction: f64,
    /// For `BetweenGridType`: the held-out types. Empty means draw them
    /// at random.
    #[serde(default)]
    pub test_types: Vec<GridType>,
}

impl SplitSpec {
    pub fn new(setup: Setup, seed: u64) -> Self {
        Self {
            setup,
            seed,
            test_fraction: 0.2,
            test_types: Vec::new(),
        }
    }

    pub fn holding_out(mut self, types: impl IntoIterator<Item = GridType>) -> Self {
        self.setup = Setup::BetweenGridType;
        self.test_types = types.into_iter().collect();
        self
    }
}

/// Indices into the data passed to [`make_split`], ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn test_count(units: usize, fraction: f64) -> usize {
    if units < 2 {
        return 0;
    }
    ((units as f64 * fraction).round() as usize).clamp(1, units - 1)
}

/// Partitions `data` according to `spec`. Deterministic in the seed.
///
/// The in-grid unit is the (scenario, agent count) pair. Within each grid
/// type of the in-grid-type setup, and within each grid of the in-grid
/// setup, at least one unit always stays in training; groups with a single
/// unit contribute to training only.
pub fn make_split(data: &[LabeledInstance], spec: &SplitSpec) -> Result<Split, EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyData);
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(EvalError::Unsatisfiable(format!(
            "test fraction {} is not in (0, 1)",
            spec.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_test = vec![false; data.len()];
    match spec.setup {
        Setup::InGrid => {
            let mut units: BTreeMap<&str, BTreeMap<(&str, usize), Vec<usize>>> = BTreeMap::new();
            for (i, inst) in data.iter().enumerate() {
                units
                    .entry(&inst.key.grid)
                    .or_default()
                    .entry((&inst.key.scenario, inst.key.num_agents))
                    .or_default()
                    .push(i);
            }
            for grid_units in units.values() {
                let mut members: Vec<&Vec<usize>> = grid_units.values().collect();
                members.shuffle(&mut rng);
                for unit in &members[..test_count(members.len(), spec.test_fraction)] {
                    unit.iter().for_each(|&i| is_test[i] = true);
                }
            }
        }
        Setup::InGridType => {
            let mut grids: BTreeMap<GridType, BTreeSet<&str>> = BTreeMap::new();
            for inst in data {
                grids
                    .entry(inst.grid_type)
                    .or_default()
                    .insert(&inst.key.grid);
            }
            let mut test_grids = BTreeSet::new();
            for (t, names) in &grids {
                let mut names: Vec<&str> = names.iter().copied().collect();
                if names.len() < 2 {
                    log::warn!("grid type {t} has a single grid; it is used for training only");
                    continue;
                }
                names.shuffle(&mut rng);
                test_grids.extend(
                    names[..test_count(names.len(), spec.test_fraction)]
                        .iter()
                        .copied(),
                );
            }
            for (i, inst) in data.iter().enumerate() {
                is_test[i] = test_grids.contains(inst.key.grid.as_str());
            }
        }
        Setup::BetweenGridType => {
            let present: BTreeSet<GridType> = data.iter().map(|i| i.grid_type).collect();
            let held_out: BTreeSet<GridType> = if spec.test_types.is_empty() {
                let mut types: Vec<GridType> = present.iter().copied().collect();
                types.shuffle(&mut rng);
                types[..test_count(types.len(), spec.test_fraction)]
                    .iter()
                    .copied()
                    .collect()
            } else {
                if let Some(t) = spec.test_types.iter().find(|t| !present.contains(t)) {
                    return Err(EvalError::Unsatisfiable(format!(
                        "no grid of type {t} in the data"
                    )));
                }
                spec.test_types.iter().copied().collect()
            };
            for (i, inst) in data.iter().enumerate() {
                is_test[i] = held_out.contains(&inst.grid_type);
            }
        }
    }
    let test: Vec<usize> = (0..data.len()).filter(|&i| is_test[i]).collect();
    let train: Vec<usize> = (0..data.len()).filter(|&i| !is_test[i]).collect();
    if test.is_empty() || train.is_empty() {
        return Err(EvalError::Unsatisfiable(format!(
            "{} split leaves {} training and {} test instances",
            spec.setup,
            train.len(),
            test.len()
        )));
    }
    Ok(Split { train, test })
}
