//! The solver runtime table.
//!
//! One CSV row per (instance, solver):
//!
//! ```text
//! grid,scenario,num_agents,solver,runtime_min,solved
//! empty-8-8,empty-8-8-even-1,4,ICTS,0.012,true
//! ```
//!
//! Runtimes are in minutes. A run that did not finish is recorded at the
//! five-minute cap regardless of the runtime written in the file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Time limit of a solver run, in minutes. Unsolved runs count as this.
pub const RUNTIME_CAP_MIN: f64 = 5.0;

/// Identifies one MAPF instance: the first `num_agents` entries of a
/// scenario on a grid.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub grid: String,
    pub scenario: String,
    pub num_agents: usize,
}

impl InstanceKey {
    pub fn new(grid: impl Into<String>, scenario: impl Into<String>, num_agents: usize) -> Self {
        Self {
            grid: grid.into(),
            scenario: scenario.into(),
            num_agents,
        }
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.grid, self.scenario, self.num_agents)
    }
}

/// The ordered set of candidate solvers. Order matters: it is the class
/// index order of the selector and the tie-break order of labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portfolio(Vec<String>);

impl Portfolio {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self(names.into_iter().map(Into::into).collect())
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, solver: &str) -> Option<usize> {
        self.0.iter().position(|s| s == solver)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.0[index]
    }
}

impl Default for Portfolio {
    fn default() -> Self {
        Self::new(["ICTS", "EPEA*", "SAT-MDD", "CBSH", "Lazy CBS"])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub runtime_min: f64,
    pub solved: bool,
}

impl SolverOutcome {
    pub const UNSOLVED: Self = Self {
        runtime_min: RUNTIME_CAP_MIN,
        solved: false,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeRecord {
    pub key: InstanceKey,
    pub solver_runtimes: BTreeMap<String, SolverOutcome>,
}

impl RuntimeRecord {
    /// Outcomes in portfolio order; solvers without an entry count as unsolved.
    pub fn aligned(&self, portfolio: &Portfolio) -> Vec<SolverOutcome> {
        portfolio
            .names()
            .iter()
            .map(|s| {
                self.solver_runtimes
                    .get(s)
                    .copied()
                    .unwrap_or(SolverOutcome::UNSOLVED)
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ResultsError {
    #[error("results CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("results CSV line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("results CSV header must be `grid,scenario,num_agents,solver,runtime_min,solved`")]
    Header,
    #[error("instance {key} has no result for solver `{solver}`")]
    MissingSolver { key: InstanceKey, solver: String },
}

#[derive(Deserialize)]
struct Row {
    grid: String,
    scenario: String,
    num_agents: usize,
    solver: String,
    runtime_min: f64,
    solved: String,
}

const HEADER: [&str; 6] = [
    "grid",
    "scenario",
    "num_agents",
    "solver",
    "runtime_min",
    "solved",
];

/// Loads the runtime table and groups it into one record per instance, in
/// order of first appearance.
///
/// With `strict`, an instance lacking a row for some portfolio solver is an
/// error; otherwise the gap is filled with an unsolved outcome.
pub fn load_results(
    bytes: &[u8],
    portfolio: &Portfolio,
    strict: bool,
) -> Result<Vec<RuntimeRecord>, ResultsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers()?.clone();
    if header.len() != HEADER.len() || header.iter().zip(HEADER).any(|(a, b)| a != b) {
        return Err(ResultsError::Header);
    }

    let mut records: Vec<RuntimeRecord> = Vec::new();
    let mut index: HashMap<InstanceKey, usize> = HashMap::new();
    for raw in reader.records() {
        let raw = raw?;
        let line = raw.position().map_or(0, |p| p.line());
        let row: Row = raw.deserialize(Some(&header))?;
        let fail = |message: String| ResultsError::Row { line, message };

        if portfolio.index_of(&row.solver).is_none() {
            return Err(fail(format!("unknown solver `{}`", row.solver)));
        }
        if !(row.runtime_min >= 0.0) || !row.runtime_min.is_finite() {
            return Err(fail(format!("invalid runtime {}", row.runtime_min)));
        }
        if row.num_agents == 0 {
            return Err(fail("num_agents must be positive".into()));
        }
        let solved = match row.solved.to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(fail(format!(
                    "`solved` must be true or false, got `{other}`"
                )))
            }
        };
        let outcome = if solved && row.runtime_min <= RUNTIME_CAP_MIN {
            SolverOutcome {
                runtime_min: row.runtime_min,
                solved: true,
            }
        } else {
            // A "solved" run past the limit did not finish within it.
            SolverOutcome::UNSOLVED
        };

        let key = InstanceKey::new(row.grid, row.scenario, row.num_agents);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            records.push(RuntimeRecord {
                key: key.clone(),
                solver_runtimes: BTreeMap::new(),
            });
            records.len() - 1
        });
        if records[slot]
            .solver_runtimes
            .insert(row.solver.clone(), outcome)
            .is_some()
        {
            return Err(fail(format!(
                "duplicate result for {key} and solver `{}`",
                row.solver
            )));
        }
    }

    for record in &mut records {
        for solver in portfolio.names() {
            if !record.solver_runtimes.contains_key(solver) {
                if strict {
                    return Err(ResultsError::MissingSolver {
                        key: record.key.clone(),
                        solver: solver.clone(),
                    });
                }
                record
                    .solver_runtimes
                    .insert(solver.clone(), SolverOutcome::UNSOLVED);
            }
        }
    }
    Ok(records)
}

/// Writes records in the canonical CSV layout, solvers in portfolio order.
pub fn write_results(records: &[RuntimeRecord], portfolio: &Portfolio) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for record in records {
        for (solver, outcome) in portfolio.names().iter().zip(record.aligned(portfolio)) {
            let k = &record.key;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k.grid, k.scenario, k.num_agents, solver, outcome.runtime_min, outcome.solved
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Portfolio {
        Portfolio::new(["A", "B"])
    }

    #[test]
    fn groups_rows_by_instance() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\n\
                   g,s,3,A,0.5,true\n\
                   g,s,3,B,1.5,true\n";
        let records = load_results(csv.as_bytes(), &two(), true).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].key, InstanceKey::new("g", "s", 3));
        assert_eq!(records[0].solver_runtimes["A"].runtime_min, 0.5);
        assert_eq!(records[0].solver_runtimes["B"].runtime_min, 1.5);
    }

    #[test]
    fn unsolved_forced_to_cap() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\n\
                   g,s,3,A,3.2,false\ng,s,3,B,7.0,true\n";
        let records = load_results(csv.as_bytes(), &two(), true).unwrap();
        assert_eq!(records[0].solver_runtimes["A"], SolverOutcome::UNSOLVED);
        assert_eq!(records[0].solver_runtimes["B"], SolverOutcome::UNSOLVED);
    }

    #[test]
    fn duplicate_pair_rejected() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\n\
                   g,s,3,A,0.5,true\ng,s,3,A,0.6,true\n";
        assert!(matches!(
            load_results(csv.as_bytes(), &two(), false),
            Err(ResultsError::Row { line: 3, .. })
        ));
    }

    #[test]
    fn unknown_solver_and_negative_runtime() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\ng,s,3,C,0.5,true\n";
        assert!(load_results(csv.as_bytes(), &two(), false).is_err());
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\ng,s,3,A,-0.5,true\n";
        assert!(load_results(csv.as_bytes(), &two(), false).is_err());
    }

    #[test]
    fn missing_solver_strict_vs_lenient() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\ng,s,3,A,0.5,true\n";
        assert!(matches!(
            load_results(csv.as_bytes(), &two(), true),
            Err(ResultsError::MissingSolver { .. })
        ));
        let records = load_results(csv.as_bytes(), &two(), false).unwrap();
        assert_eq!(records[0].solver_runtimes["B"], SolverOutcome::UNSOLVED);
    }

    #[test]
    fn bad_header() {
        let csv = "grid,scenario,agents,solver,runtime_min,solved\n";
        assert!(matches!(
            load_results(csv.as_bytes(), &two(), false),
            Err(ResultsError::Header)
        ));
    }

    #[test]
    fn write_then_load() {
        let csv = "grid,scenario,num_agents,solver,runtime_min,solved\n\
                   g,s,3,A,0.25,true\ng,s,3,B,5,false\nh,t,1,B,0.125,true\nh,t,1,A,5,false\n";
        let portfolio = two();
        let records = load_results(csv.as_bytes(), &portfolio, true).unwrap();
        let again = load_results(
            write_results(&records, &portfolio).as_bytes(),
            &portfolio,
            true,
        )
        .unwrap();
        assert_eq!(records, again);
    }
}
