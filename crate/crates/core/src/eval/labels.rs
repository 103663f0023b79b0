use std::sync::Arc;

use crate::benchmark::{InstanceKey, Portfolio, RuntimeRecord, RUNTIME_CAP_MIN};
use crate::pipeline::FeatureStore;

use super::{EvalError, GridTaxonomy, GridType};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstance {
    pub key: InstanceKey,
    pub grid_type: GridType,
    /// Full feature vector in store layout.
    pub features: Arc<[f64]>,
    pub label: usize,
    pub oracle_runtime: f64,
    /// Capped at the time limit, in portfolio order.
    pub runtimes: Vec<f64>,
    pub solved: Vec<bool>,
}

impl LabeledInstance {
    /// Builds an instance from per-solver outcomes in portfolio order.
    pub fn new(
        key: InstanceKey,
        grid_type: GridType,
        features: Arc<[f64]>,
        runtimes: &[f64],
        solved: &[bool],
    ) -> Self {
        assert_eq!(runtimes.len(), solved.len());
        let runtimes: Vec<f64> = runtimes
            .iter()
            .zip(solved)
            .map(|(&r, &s)| {
                if s {
                    r.min(RUNTIME_CAP_MIN)
                } else {
                    RUNTIME_CAP_MIN
                }
            })
            .collect();
        let label = fastest(&runtimes, solved);
        Self {
            key,
            grid_type,
            features,
            label,
            oracle_runtime: runtimes[label],
            runtimes,
            solved: solved.to_vec(),
        }
    }

    pub fn any_solved(&self) -> bool {
        self.solved.iter().any(|&s| s)
    }
}

/// Index of the fastest solved solver, or of the lowest runtime if none
/// solved. Ties go to the earlier portfolio position.
pub fn fastest(runtimes: &[f64], solved: &[bool]) -> usize {
    let any = solved.iter().any(|&s| s);
    let mut best: Option<usize> = None;
    for (i, &r) in runtimes.iter().enumerate() {
        if any && !solved[i] {
            continue;
        }
        if best.map_or(true, |b| r < runtimes[b]) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Joins runtime records with their feature vectors and grid types.
///
/// The output follows the order of `records`.
pub fn derive_labels(
    records: &[RuntimeRecord],
    features: &FeatureStore,
    portfolio: &Portfolio,
    taxonomy: &GridTaxonomy,
) -> Result<Vec<LabeledInstance>, EvalError> {
    records
        .iter()
        .map(|record| {
            let vector = features
                .get(&record.key)
                .ok_or_else(|| EvalError::MissingFeatures(record.key.clone()))?;
            let grid_type = taxonomy
                .type_of(&record.key.grid)
                .ok_or_else(|| EvalError::UnknownGridType(record.key.grid.clone()))?;
            let outcomes = record.aligned(portfolio);
            let runtimes: Vec<f64> = outcomes.iter().map(|o| o.runtime_min).collect();
            let solved: Vec<bool> = outcomes.iter().map(|o| o.solved).collect();
            Ok(LabeledInstance::new(
                record.key.clone(),
                grid_type,
                vector.clone(),
                &runtimes,
                &solved,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(runtimes: &[f64], solved: &[bool]) -> LabeledInstance {
        LabeledInstance::new(
            InstanceKey::new("empty-8-8", "s", 1),
            GridType::Empty,
            Arc::from(vec![0.0]),
            runtimes,
            solved,
        )
    }

    #[test]
    fn label_is_fastest_solved() {
        let i = inst(
            &[1.0, 0.5, 5.0, 2.0, 5.0],
            &[true, true, false, true, false],
        );
        assert_eq!((i.label, i.oracle_runtime), (1, 0.5));
    }

    #[test]
    fn all_unsolved_takes_first() {
        let i = inst(&[5.0; 5], &[false; 5]);
        assert_eq!((i.label, i.oracle_runtime), (0, 5.0));
    }

    #[test]
    fn ties_follow_portfolio_order() {
        let i = inst(&[1.0, 0.7, 2.0, 0.7, 3.0], &[true; 5]);
        assert_eq!(i.label, 1);
    }

    #[test]
    fn unsolved_runtime_is_capped() {
        let i = inst(&[0.2, 0.1], &[true, false]);
        assert_eq!(i.runtimes, vec![0.2, 5.0]);
        assert_eq!(i.label, 0);
    }
}
