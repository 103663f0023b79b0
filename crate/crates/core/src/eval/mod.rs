//! Labels, train/test splits for the three selection setups, baseline
//! policies and the Acc / Cov / RT / %Rg metrics.

mod labels;
mod metrics;
mod split;
mod taxonomy;

pub use labels::{derive_labels, fastest, LabeledInstance};
pub use metrics::{
    evaluate, regret_percent, single_best_policy, Aggregation, ConstantPolicy, EvalReport, Metrics,
    ModelPolicy, Oracle, Policy, ReportRow, RUNTIME_FLOOR_MIN,
};
pub use split::{make_split, Setup, Split, SplitSpec};
pub use taxonomy::{infer_grid_type, GridTaxonomy, GridType};

use crate::benchmark::InstanceKey;
use crate::gbdt::{GbdtError, TrainingSet};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no data")]
    EmptyData,
    #[error("no features for instance {0}")]
    MissingFeatures(InstanceKey),
    #[error("grid `{0}` has no known type; add it to the taxonomy")]
    UnknownGridType(String),
    #[error("split is unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error("{0}")]
    Model(String),
}

/// Training rows for the instances at `indices`, reading `columns`.
pub fn training_set(
    data: &[LabeledInstance],
    indices: &[usize],
    columns: &[usize],
    num_classes: usize,
) -> Result<TrainingSet, GbdtError> {
    let mut features = Vec::with_capacity(indices.len() * columns.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        features.extend(columns.iter().map(|&c| data[i].features[c]));
        labels.push(data[i].label);
    }
    TrainingSet::new(features, columns.len(), labels, num_classes)
}
