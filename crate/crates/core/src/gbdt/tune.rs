//! K-fold cross-validated grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, GbdtError, Hyperparams, TrainingSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub max_depth: Vec<usize>,
    pub rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub l2_lambda: Vec<f64>,
    pub subsample: Vec<f64>,
    pub colsample: Vec<f64>,
    pub min_child_weight: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            max_depth: vec![3, 6],
            rounds: vec![100, 300],
            learning_rate: vec![0.1, 0.3],
            l2_lambda: vec![1.0],
            subsample: vec![0.8, 1.0],
            colsample: vec![1.0],
            min_child_weight: vec![1.0],
        }
    }
}

impl HyperGrid {
    pub fn single(params: &Hyperparams) -> Self {
        Self {
            max_depth: vec![params.max_depth],
            rounds: vec![params.rounds],
            learning_rate: vec![params.learning_rate],
            l2_lambda: vec![params.l2_lambda],
            subsample: vec![params.subsample],
            colsample: vec![params.colsample],
            min_child_weight: vec![params.min_child_weight],
        }
    }

    /// Every grid point, rounds varying fastest.
    pub fn points(&self) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &learning_rate in &self.learning_rate {
                for &l2_lambda in &self.l2_lambda {
                    for &subsample in &self.subsample {
                        for &colsample in &self.colsample {
                            for &min_child_weight in &self.min_child_weight {
                                for &rounds in &self.rounds {
                                    out.push(Hyperparams {
                                        max_depth,
                                        rounds,
                                        learning_rate,
                                        min_child_weight,
                                        l2_lambda,
                                        subsample,
                                        colsample,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.max_depth.len()
            * self.rounds.len()
            * self.learning_rate.len()
            * self.l2_lambda.len()
            * self.subsample.len()
            * self.colsample.len()
            * self.min_child_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub params: Hyperparams,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: Hyperparams,
    pub stratified: bool,
    pub results: Vec<CvResult>,
}

impl TuneReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "max_depth,rounds,learning_rate,l2_lambda,subsample,colsample,min_child_weight,mean_accuracy,fold_accuracy\n",
        );
        for r in &self.results {
            let p = &r.params;
            let folds: Vec<String> = r.fold_accuracy.iter().map(|a| format!("{a:?}")).collect();
            out.push_str(&format!(
                "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
                p.max_depth,
                p.rounds,
                p.learning_rate,
                p.l2_lambda,
                p.subsample,
                p.colsample,
                p.min_child_weight,
                r.mean_accuracy,
                folds.join(";")
            ));
        }
        out
    }
}

/// Assigns each row a fold in `0..folds`.
///
/// Rows of each class are shuffled and dealt round-robin, continuing the
/// deal across classes so fold sizes differ by at most one. If some class
/// has fewer rows than folds, a plain shuffled split is used instead and the
/// second value is `false`.
pub fn stratified_folds(
    labels: &[usize],
    folds: usize,
    seed: u64,
) -> Result<(Vec<usize>, bool), GbdtError> {
    let n = labels.len();
    if folds < 2 || n < folds {
        return Err(GbdtError::TooFewRows { rows: n, folds });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let stratified = by_class
        .iter()
        .all(|rows| rows.is_empty() || rows.len() >= folds);
    let mut assignment = vec![0; n];
    if stratified {
        let mut next = 0;
        for rows in by_class.iter_mut() {
            rows.shuffle(&mut rng);
            for &i in rows.iter() {
                assignment[i] = next % folds;
                next += 1;
            }
        }
    } else {
        log::warn!("a class has fewer than {folds} rows; using a non-stratified split");
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        for (pos, &i) in rows.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok((assignment, stratified))
}

fn better(a: &CvResult, b: &CvResult) -> bool {
    if a.mean_accuracy != b.mean_accuracy {
        return a.mean_accuracy > b.mean_accuracy;
    }
    if a.params.rounds != b.params.rounds {
        return a.params.rounds < b.params.rounds;
    }
    a.params.max_depth < b.params.max_depth
}

/// Grid search by k-fold cross-validated accuracy.
///
/// Ties go to fewer rounds, then shallower trees, then the earlier grid
/// point. Points differing only in `rounds` share one fit per fold, since a
/// shorter run is a prefix of a longer one.
pub fn tune(
    data: &TrainingSet,
    grid: &HyperGrid,
    folds: usize,
    seed: u64,
) -> Result<TuneReport, GbdtError> {
    if grid.is_empty() {
        return Err(GbdtError::InvalidParams("empty hyperparameter grid".into()));
    }
    let (assignment, stratified) = stratified_folds(&data.labels, folds, seed)?;
    let splits: Vec<(TrainingSet, TrainingSet)> = (0..folds)
        .map(|f| {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != f).collect();
            let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == f).collect();
            (data.select(&train_idx), data.select(&test_idx))
        })
        .collect();

    let mut rounds = grid.rounds.clone();
    rounds.sort_unstable();
    rounds.dedup();
    let max_rounds = *rounds.last().unwrap();
    let points = grid.points();
    let families: Vec<&[Hyperparams]> = points.chunks(grid.rounds.len()).collect();

    let mut results = Vec::with_capacity(points.len());
    for family in families {
        let base = Hyperparams {
            rounds: max_rounds,
            ..family[0].clone()
        };
        base.validate()?;
        let per_fold: Vec<Vec<f64>> = splits
            .par_iter()
            .enumerate()
            .map(|(f, (train_set, test_set))| {
                let model = train(train_set, &base, seed.wrapping_add(f as u64))?;
                Ok(family
                    .iter()
                    .map(|p| {
                        let hits = (0..test_set.len())
                            .filter(|&i| {
                                let pred = model
                                    .predict_truncated(test_set.row(i), p.rounds)
                                    .expect("dimension");
                                pred.class == test_set.labels[i]
                            })
                            .count();
                        hits as f64 / test_set.len() as f64
                    })
                    .collect())
            })
            .collect::<Result<_, GbdtError>>()?;
        for (j, params) in family.iter().enumerate() {
            let fold_accuracy: Vec<f64> = per_fold.iter().map(|accs| accs[j]).collect();
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / folds as f64;
            log::debug!("cv {params:?}: {mean_accuracy:.4}");
            results.push(CvResult {
                params: params.clone(),
                fold_accuracy,
                mean_accuracy,
            });
        }
    }
    let mut best = &results[0];
    for r in &results[1..] {
        if better(r, best) {
            best = r;
        }
    }
    Ok(TuneReport {
        best: best.params.clone(),
        stratified,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_and_stratified() {
        let labels: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let (a, strat) = stratified_folds(&labels, 4, 1).unwrap();
        assert!(strat);
        for f in 0..4 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!((9..=11).contains(&size));
            for c in 0..3 {
                assert!(a.iter().zip(&labels).any(|(&x, &l)| x == f && l == c));
            }
        }
    }

    #[test]
    fn rare_class_falls_back() {
        let labels = vec![0, 0, 0, 0, 0, 0, 1];
        let (_, strat) = stratified_folds(&labels, 4, 0).unwrap();
        assert!(!strat);
        assert!(matches!(
            stratified_folds(&[0, 1], 4, 0),
            Err(GbdtError::TooFewRows { rows: 2, folds: 4 })
        ));
    }

    #[test]
    fn single_point_grid_returns_it() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
        let data = TrainingSet::from_rows(&rows, labels, 2).unwrap();
        let params = Hyperparams {
            rounds: 5,
            max_depth: 2,
            ..Default::default()
        };
        let report = tune(&data, &HyperGrid::single(&params), 4, 0).unwrap();
        assert_eq!(report.best, params);
        assert_eq!(report.results.len(), 1);
    }

    #[test]
    fn ties_prefer_fewer_rounds_then_shallower() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 10 { i as f64 } else { i as f64 + 100.0 }])
            .collect();
        let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
        let data = TrainingSet::from_rows(&rows, labels, 2).unwrap();
        let grid = HyperGrid {
            max_depth: vec![4, 2],
            rounds: vec![20, 10],
            learning_rate: vec![0.3],
            l2_lambda: vec![1.0],
            subsample: vec![1.0],
            colsample: vec![1.0],
            min_child_weight: vec![1.0],
        };
        let report = tune(&data, &grid, 4, 0).unwrap();
        assert!(report.results.iter().all(|r| r.mean_accuracy == 1.0));
        assert_eq!((report.best.rounds, report.best.max_depth), (10, 2));
        assert_eq!(report.to_csv().lines().count(), 5);
    }
}
