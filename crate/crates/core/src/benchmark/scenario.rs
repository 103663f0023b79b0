//! MovingAI `.scen` files (version 1).
//!
//! After a `version 1` line, every non-empty line carries nine tab-separated
//! fields: bucket, map name, map width, map height, start x, start y, goal x,
//! goal y and the optimal single-agent path length. Coordinates are
//! `(x = column, y = row)` with the origin at the top-left.

use super::{CellId, GridMap, ParseError};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioEntry {
    pub bucket: u32,
    pub map_name: String,
    pub map_width: usize,
    pub map_height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    /// Carried through unchanged; the pipeline recomputes distances itself.
    pub optimal_length: f64,
}

impl ScenarioEntry {
    pub fn start_cell(&self, grid: &GridMap) -> CellId {
        grid.cell(self.start.0, self.start.1)
    }

    pub fn goal_cell(&self, grid: &GridMap) -> CellId {
        grid.cell(self.goal.0, self.goal.1)
    }
}

fn field<T: std::str::FromStr>(
    raw: &str,
    lineno: usize,
    col: usize,
    what: &str,
) -> Result<T, ParseError> {
    raw.parse::<T>().map_err(|_| {
        ParseError::at(
            lineno,
            col,
            format!("{what}: expected a number, got `{raw}`"),
        )
    })
}

fn check_cell(
    grid: &GridMap,
    (x, y): (usize, usize),
    lineno: usize,
    what: &str,
) -> Result<(), ParseError> {
    if x >= grid.width() || y >= grid.height() {
        return Err(ParseError::at_line(
            lineno,
            format!(
                "{what} ({x}, {y}) lies outside the {}x{} map",
                grid.width(),
                grid.height()
            ),
        ));
    }
    if !grid.is_passable_xy(x, y) {
        return Err(ParseError::at_line(
            lineno,
            format!("{what} ({x}, {y}) is a blocked cell"),
        ));
    }
    Ok(())
}

/// Parses a scenario file and validates every coordinate against `map`.
pub fn parse_scen(bytes: &[u8], map: &GridMap) -> Result<Vec<ScenarioEntry>, ParseError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseError::at_line(1, format!("scenario is not valid UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if matches!(header.trim(), "version 1" | "version 1.0") => {}
        _ => return Err(ParseError::at_line(1, "expected `version 1`")),
    }

    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 9 {
            return Err(ParseError::at_line(
                lineno,
                format!("expected 9 tab-separated fields, found {}", fields.len()),
            ));
        }
        let entry = ScenarioEntry {
            bucket: field(fields[0], lineno, 1, "bucket")?,
            map_name: fields[1].to_string(),
            map_width: field(fields[2], lineno, 3, "map width")?,
            map_height: field(fields[3], lineno, 4, "map height")?,
            start: (
                field(fields[4], lineno, 5, "start x")?,
                field(fields[5], lineno, 6, "start y")?,
            ),
            goal: (
                field(fields[6], lineno, 7, "goal x")?,
                field(fields[7], lineno, 8, "goal y")?,
            ),
            optimal_length: field(fields[8].trim_end(), lineno, 9, "optimal length")?,
        };
        if entry.map_width != map.width() || entry.map_height != map.height() {
            return Err(ParseError::at_line(
                lineno,
                format!(
                    "scenario declares a {}x{} map but `{}` is {}x{}",
                    entry.map_width,
                    entry.map_height,
                    map.name(),
                    map.width(),
                    map.height()
                ),
            ));
        }
        check_cell(map, entry.start, lineno, "start")?;
        check_cell(map, entry.goal, lineno, "goal")?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Serializes entries as a version 1 scenario file.
pub fn write_scen(entries: &[ScenarioEntry]) -> String {
    let mut out = String::from("version 1\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            e.bucket,
            e.map_name,
            e.map_width,
            e.map_height,
            e.start.0,
            e.start.1,
            e.goal.0,
            e.goal.1,
            e.optimal_length
        ));
    }
    out
}
