//! Multiclass gradient-boosted decision trees.
//!
//! Each boosting round fits one regression tree per class to the softmax
//! gradients `g = p − y` and hessians `h = p(1 − p)`. Splits are found by
//! exact greedy search maximising
//!
//! ```text
//! gain = ½ [G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)]
//! ```
//!
//! and leaves take the value `−η·G/(H+λ)`. Scores start from the log prior of
//! each class. Row and column subsampling draw from a seeded generator, so a
//! model is a pure function of data, hyperparameters and seed.

mod objective;
mod tree;
mod tune;

pub use objective::{multiclass_log_loss, softmax, softmax_gradients};
pub use tree::TreeNode;
pub use tune::{stratified_folds, tune, CvResult, HyperGrid, TuneReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tree::{build_tree, SortedColumns, TreeParams};

pub const MODEL_FORMAT: &str = "mapf-select-gbdt/1";

// Classes absent from the training labels start at this prior instead of 0.
const PRIOR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub max_depth: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    pub subsample: f64,
    pub colsample: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            rounds: 100,
            learning_rate: 0.3,
            min_child_weight: 1.0,
            l2_lambda: 1.0,
            subsample: 1.0,
            colsample: 1.0,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), GbdtError> {
        let bad = |m: &str| Err(GbdtError::InvalidParams(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_lambda >= 0.0) {
            return bad("l2_lambda must be non-negative");
        }
        if !(self.min_child_weight >= 0.0) {
            return bad("min_child_weight must be non-negative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GbdtError {
    #[error("training set is empty")]
    EmptyData,
    #[error("row {row}: label {label} is not below the class count {num_classes}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("row {row}, feature {feature}: value is missing or not finite")]
    NonFinite { row: usize, feature: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file has format `{0}`, expected `{MODEL_FORMAT}`")]
    Format(String),
}

/// A dense row-major training matrix with class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<f64>,
    pub num_features: usize,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl TrainingSet {
    pub fn new(
        features: Vec<f64>,
        num_features: usize,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, GbdtError> {
        if labels.is_empty() {
            return Err(GbdtError::EmptyData);
        }
        if features.len() != labels.len() * num_features {
            return Err(GbdtError::DimensionMismatch {
                expected: labels.len() * num_features,
                got: features.len(),
            });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(GbdtError::LabelOutOfRange {
                row,
                label,
                num_classes,
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(GbdtError::NonFinite {
                row: pos / num_features.max(1),
                feature: pos % num_features.max(1),
            });
        }
        Ok(Self {
            features,
            num_features,
            labels,
            num_classes,
        })
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, GbdtError> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(GbdtError::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        Self::new(rows.concat(), d, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    /// The rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.num_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            num_features: self.num_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
}

/// A trained selector. Immutable; share freely across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub format: String,
    pub num_classes: usize,
    pub num_features: usize,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub hyperparams: Hyperparams,
    pub base_score: Vec<f64>,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<TreeNode>>,
}

impl GbdtModel {
    /// A model without trees that always scores `base_score`.
    pub fn constant(base_score: Vec<f64>, num_features: usize) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            num_classes: base_score.len(),
            num_features,
            class_names: (0..base_score.len())
                .map(|c| format!("class_{c}"))
                .collect(),
            feature_names: (0..num_features).map(|f| format!("f{f}")).collect(),
            hyperparams: Hyperparams {
                rounds: 0,
                ..Hyperparams::default()
            },
            base_score,
            trees: Vec::new(),
        }
    }

    pub fn with_names(mut self, class_names: Vec<String>, feature_names: Vec<String>) -> Self {
        assert_eq!(class_names.len(), self.num_classes);
        assert_eq!(feature_names.len(), self.num_features);
        self.class_names = class_names;
        self.feature_names = feature_names;
        self
    }

    pub fn rounds(&self) -> usize {
        self.trees.len()
    }

    /// Summed scores of the first `rounds` rounds plus the base score.
    pub fn raw_scores_truncated(&self, x: &[f64], rounds: usize) -> Vec<f64> {
        let mut scores = self.base_score.clone();
        for round in self.trees.iter().take(rounds) {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += tree.predict(x);
            }
        }
        scores
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        self.raw_scores_truncated(x, self.trees.len())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, GbdtError> {
        self.predict_truncated(x, self.trees.len())
    }

    /// Prediction using only the first `rounds` boosting rounds.
    pub fn predict_truncated(&self, x: &[f64], rounds: usize) -> Result<Prediction, GbdtError> {
        if x.len() != self.num_features {
            return Err(GbdtError::DimensionMismatch {
                expected: self.num_features,
                got: x.len(),
            });
        }
        let probabilities = softmax(&self.raw_scores_truncated(x, rounds));
        Ok(Prediction {
            class: argmax(&probabilities),
            probabilities,
        })
    }

    /// Total split gain per feature.
    pub fn importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_features];
        for tree in self.trees.iter().flatten() {
            tree.for_each_split(&mut |f, gain| out[f] += gain);
        }
        out
    }

    /// The same model over permuted inputs: feature `f` of the old model
    /// reads column `map[f]` of the new input.
    pub fn permute_features(&self, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.num_features);
        let mut out = self.clone();
        for tree in out.trees.iter_mut().flatten() {
            tree.remap_features(map);
        }
        let mut names = vec![String::new(); self.num_features];
        for (f, &to) in map.iter().enumerate() {
            names[to] = self.feature_names[f].clone();
        }
        out.feature_names = names;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GbdtError> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(GbdtError::Format(model.format));
        }
        if model.base_score.len() != model.num_classes
            || model.trees.iter().any(|r| r.len() != model.num_classes)
        {
            return Err(GbdtError::Format("inconsistent class count".into()));
        }
        Ok(model)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-class log prior of the labels, floored for absent classes.
pub fn log_prior(labels: &[usize], num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
        .iter()
        .map(|&c| (c as f64 / labels.len() as f64).max(PRIOR_FLOOR).ln())
        .collect()
}

/// Mean multiclass log-loss of a model over a data set.
pub fn mean_log_loss(model: &GbdtModel, data: &TrainingSet) -> f64 {
    (0..data.len())
        .map(|i| multiclass_log_loss(&model.raw_scores(data.row(i)), data.labels[i]))
        .sum::<f64>()
        / data.len() as f64
}

/// Trains a model.
///
/// Single-class data yields a constant model without trees.
pub fn train(data: &TrainingSet, params: &Hyperparams, seed: u64) -> Result<GbdtModel, GbdtError> {
    params.validate()?;
    if data.is_empty() {
        return Err(GbdtError::EmptyData);
    }
    let n = data.len();
    let d = data.num_features;
    let c = data.num_classes;
    let base_score = log_prior(&data.labels, c);
    let mut model = GbdtModel::constant(base_score.clone(), d);
    model.hyperparams = params.clone();

    let distinct = {
        let mut seen = vec![false; c];
        data.labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct <= 1 {
        return Ok(model);
    }

    let columns = SortedColumns::new(&data.features, n, d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        learning_rate: params.learning_rate,
        min_child_weight: params.min_child_weight,
        l2_lambda: params.l2_lambda,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut grad = vec![vec![0.0; n]; c];
    let mut hess = vec![vec![0.0; n]; c];
    let num_cols = columns.features.len();
    let keep_cols =
        ((params.colsample * num_cols as f64).ceil() as usize).clamp(num_cols.min(1), num_cols);

    for _ in 0..params.rounds {
        for i in 0..n {
            let (g, h) = softmax_gradients(&scores[i * c..(i + 1) * c], data.labels[i]);
            for k in 0..c {
                grad[k][i] = g[k];
                hess[k][i] = h[k].max(1e-16);
            }
        }
        let mut in_sample = vec![true; n];
        if params.subsample < 1.0 {
            for s in in_sample.iter_mut() {
                *s = rng.random::<f64>() < params.subsample;
            }
            if !in_sample.iter().any(|&s| s) {
                in_sample[rng.random_range(0..n)] = true;
            }
        }
        let mut round_trees = Vec::with_capacity(c);
        for k in 0..c {
            let mut use_column = vec![true; num_cols];
            if keep_cols < num_cols {
                use_column.fill(false);
                for idx in rand::seq::index::sample(&mut rng, num_cols, keep_cols) {
                    use_column[idx] = true;
                }
            }
            round_trees.push(build_tree(
                &data.features,
                d,
                &columns,
                &use_column,
                &grad[k],
                &hess[k],
                &in_sample,
                tree_params,
            ));
        }
        for i in 0..n {
            let x = data.row(i);
            for (k, tree) in round_trees.iter().enumerate() {
                scores[i * c + k] += tree.predict(x);
            }
        }
        model.trees.push(round_trees);
    }
    Ok(model)
}
