use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gbdt::GbdtModel;

use super::{EvalError, GridType, LabeledInstance};

/// Runtimes are floored at this many minutes before computing regret.
pub const RUNTIME_FLOOR_MIN: f64 = 0.001;

/// Chooses a solver index for an instance.
pub trait Policy: Sync {
    fn name(&self) -> String;
    fn choose(&self, instance: &LabeledInstance) -> usize;
}

/// Always picks the label.
pub struct Oracle;

impl Policy for Oracle {
    fn name(&self) -> String {
        "Oracle".into()
    }

    fn choose(&self, instance: &LabeledInstance) -> usize {
        instance.label
    }
}

pub struct ConstantPolicy {
    pub solver: usize,
    pub name: String,
}

impl Policy for ConstantPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn choose(&self, _: &LabeledInstance) -> usize {
        self.solver
    }
}

/// The solver with the lowest mean capped runtime on `train`; ties go to
/// the earlier portfolio position.
pub fn single_best_policy(train: &[LabeledInstance]) -> Result<ConstantPolicy, EvalError> {
    let first = train.first().ok_or(EvalError::EmptyData)?;
    let mut totals = vec![0.0; first.runtimes.len()];
    for inst in train {
        for (t, r) in totals.iter_mut().zip(&inst.runtimes) {
            *t += r;
        }
    }
    let mut best = 0;
    for (i, &t) in totals.iter().enumerate() {
        if t < totals[best] {
            best = i;
        }
    }
    Ok(ConstantPolicy {
        solver: best,
        name: "SingleBest".into(),
    })
}

/// A trained model reading the given columns of the full feature vector.
pub struct ModelPolicy {
    pub name: String,
    pub model: GbdtModel,
    pub columns: Vec<usize>,
}

impl ModelPolicy {
    pub fn new(
        name: impl Into<String>,
        model: GbdtModel,
        columns: Vec<usize>,
    ) -> Result<Self, EvalError> {
        if columns.len() != model.num_features {
            return Err(EvalError::Model(format!(
                "model reads {} features but {} columns were selected",
                model.num_features,
                columns.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            model,
            columns,
        })
    }
}

impl Policy for ModelPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn choose(&self, instance: &LabeledInstance) -> usize {
        let x: Vec<f64> = self.columns.iter().map(|&c| instance.features[c]).collect();
        self.model
            .predict(&x)
            .expect("column count checked at construction")
            .class
    }
}

/// `100 · (alg − oracle) / oracle` with both runtimes floored.
pub fn regret_percent(alg_runtime: f64, oracle_runtime: f64) -> f64 {
    let alg = alg_runtime.max(RUNTIME_FLOOR_MIN);
    let oracle = oracle_runtime.max(RUNTIME_FLOOR_MIN);
    100.0 * (alg - oracle) / oracle
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean over instances.
    All,
    /// Mean over grid types of the per-type means.
    Avg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub instances: usize,
    pub acc: f64,
    pub cov: f64,
    /// Minutes.
    pub rt: f64,
    /// Mean percent regret.
    pub regret: f64,
}

#[derive(Clone, Copy, Debug)]
struct Outcome {
    correct: f64,
    solved: f64,
    runtime: f64,
    regret: f64,
}

fn outcome(policy: &dyn Policy, inst: &LabeledInstance) -> Outcome {
    let choice = policy.choose(inst);
    let runtime = inst.runtimes[choice];
    Outcome {
        correct: f64::from(u8::from(choice == inst.label)),
        solved: f64::from(u8::from(inst.solved[choice])),
        runtime,
        regret: regret_percent(runtime, inst.oracle_runtime),
    }
}

fn mean(outcomes: &[Outcome]) -> Metrics {
    let n = outcomes.len() as f64;
    let sum = |f: fn(&Outcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    Metrics {
        instances: outcomes.len(),
        acc: sum(|o| o.correct),
        cov: sum(|o| o.solved),
        rt: sum(|o| o.runtime),
        regret: sum(|o| o.regret),
    }
}

fn outcomes(policy: &dyn Policy, test: &[LabeledInstance]) -> Vec<Outcome> {
    test.par_iter().map(|inst| outcome(policy, inst)).collect()
}

fn by_type(test: &[LabeledInstance], outcomes: &[Outcome]) -> BTreeMap<GridType, Metrics> {
    let mut groups: BTreeMap<GridType, Vec<Outcome>> = BTreeMap::new();
    for (inst, o) in test.iter().zip(outcomes) {
        groups.entry(inst.grid_type).or_default().push(*o);
    }
    groups.into_iter().map(|(t, os)| (t, mean(&os))).collect()
}

fn average_of(per_type: &BTreeMap<GridType, Metrics>, instances: usize) -> Metrics {
    let k = per_type.len() as f64;
    let avg = |f: fn(&Metrics) -> f64| per_type.values().map(f).sum::<f64>() / k;
    Metrics {
        instances,
        acc: avg(|m| m.acc),
        cov: avg(|m| m.cov),
        rt: avg(|m| m.rt),
        regret: avg(|m| m.regret),
    }
}

/// Scores `policy` on `test`.
///
/// # Panics
/// If `test` is empty.
pub fn evaluate(policy: &dyn Policy, test: &[LabeledInstance], mode: Aggregation) -> Metrics {
    assert!(!test.is_empty(), "empty test set");
    let outs = outcomes(policy, test);
    match mode {
        Aggregation::All => mean(&outs),
        Aggregation::Avg => average_of(&by_type(test, &outs), outs.len()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    /// `all`, `avg`, or a grid type name.
    pub group: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// For each policy: an `all` row, an `avg` row, then one row per grid
    /// type present in `test`.
    pub fn build(policies: &[&dyn Policy], test: &[LabeledInstance]) -> Result<Self, EvalError> {
        if test.is_empty() {
            return Err(EvalError::EmptyData);
        }
        let mut rows = Vec::new();
        for policy in policies {
            let outs = outcomes(*policy, test);
            let per_type = by_type(test, &outs);
            let method = policy.name();
            let mut push = |group: &str, metrics: Metrics| {
                rows.push(ReportRow {
                    method: method.clone(),
                    group: group.to_string(),
                    metrics,
                })
            };
            push("all", mean(&outs));
            push("avg", average_of(&per_type, outs.len()));
            for (t, m) in &per_type {
                push(t.as_str(), *m);
            }
        }
        Ok(Self { rows })
    }

    pub fn get(&self, method: &str, group: &str) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.group == group)
            .map(|r| &r.metrics)
    }

    pub fn extend(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,group,instances,acc,cov,rt,regret\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.4},{:.2}",
                r.method, r.group, m.instances, m.acc, m.cov, m.rt, m.regret
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
