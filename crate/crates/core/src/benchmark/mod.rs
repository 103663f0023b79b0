//! Benchmark file formats: MovingAI maps and scenarios, plus the solver
//! runtime table consumed by the labelling step.

mod map;
mod results;
mod scenario;

pub use map::{parse_map, CellId, GridMap};
pub use results::{
    load_results, write_results, InstanceKey, Portfolio, ResultsError, RuntimeRecord,
    SolverOutcome, RUNTIME_CAP_MIN,
};
pub use scenario::{parse_scen, write_scen, ScenarioEntry};

use std::fmt;

/// A parse failure located in the input. Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at_line(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column: None,
            message: message.into(),
        }
    }

    pub(crate) fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column: Some(column),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(col) => write!(f, "line {}, column {}: {}", self.line, col, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}
