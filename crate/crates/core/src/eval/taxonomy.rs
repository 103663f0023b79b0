use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridType {
    Empty,
    Random,
    Warehouse,
    Game,
    City,
    Maze,
    Room,
}

impl GridType {
    pub const ALL: [GridType; 7] = [
        GridType::Empty,
        GridType::Random,
        GridType::Warehouse,
        GridType::Game,
        GridType::City,
        GridType::Maze,
        GridType::Room,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GridType::Empty => "empty",
            GridType::Random => "random",
            GridType::Warehouse => "warehouse",
            GridType::Game => "game",
            GridType::City => "city",
            GridType::Maze => "maze",
            GridType::Room => "room",
        }
    }
}

impl fmt::Display for GridType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GridType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GridType::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown grid type `{s}`"))
    }
}

const CITY_PREFIXES: [&str; 10] = [
    "berlin", "boston", "paris", "london", "moscow", "newyork", "shanghai", "sydney", "denver",
    "milan",
];
const GAME_PREFIXES: [&str; 11] = [
    "den", "ost", "brc", "lak", "orz", "ht_", "lt_", "w_", "arena", "hrt", "lgt",
];

/// Guesses the type of a MovingAI benchmark grid from its file name,
/// e.g. `random-32-32-10`, `Berlin_1_256`, `den520d`.
pub fn infer_grid_type(name: &str) -> Option<GridType> {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    let base = base
        .strip_suffix(".map")
        .unwrap_or(base)
        .to_ascii_lowercase();
    for t in [
        GridType::Empty,
        GridType::Random,
        GridType::Warehouse,
        GridType::Maze,
        GridType::Room,
        GridType::City,
        GridType::Game,
    ] {
        if base.starts_with(t.as_str()) {
            return Some(t);
        }
    }
    if CITY_PREFIXES.iter().any(|p| base.starts_with(p)) {
        return Some(GridType::City);
    }
    if GAME_PREFIXES.iter().any(|p| base.starts_with(p)) {
        return Some(GridType::Game);
    }
    None
}

/// Grid name to type. Explicit entries win over name-based inference.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridTaxonomy {
    pub explicit: BTreeMap<String, GridType>,
}

impl GridTaxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, grid: impl Into<String>, grid_type: GridType) -> Self {
        self.explicit.insert(grid.into(), grid_type);
        self
    }

    pub fn type_of(&self, grid: &str) -> Option<GridType> {
        self.explicit
            .get(grid)
            .copied()
            .or_else(|| infer_grid_type(grid))
    }

    /// Parses `{"grid name": "type", ...}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("taxonomy serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_benchmark_names() {
        let cases = [
            ("empty-8-8", GridType::Empty),
            ("random-32-32-20.map", GridType::Random),
            ("warehouse-10-20-10-2-1", GridType::Warehouse),
            ("maze-128-128-10", GridType::Maze),
            ("room-64-64-8", GridType::Room),
            ("Berlin_1_256", GridType::City),
            ("Paris_1_256", GridType::City),
            ("den520d", GridType::Game),
            ("ht_chantry", GridType::Game),
            ("w_woundedcoast", GridType::Game),
            ("maps/lak303d.map", GridType::Game),
        ];
        for (name, t) in cases {
            assert_eq!(infer_grid_type(name), Some(t), "{name}");
        }
        assert_eq!(infer_grid_type("mystery"), None);
    }

    #[test]
    fn explicit_entries_override() {
        let tax = GridTaxonomy::from_json(r#"{"random-8-8": "maze", "mystery": "city"}"#).unwrap();
        assert_eq!(tax.type_of("random-8-8"), Some(GridType::Maze));
        assert_eq!(tax.type_of("mystery"), Some(GridType::City));
        assert_eq!(tax.type_of("room-1"), Some(GridType::Room));
        assert_eq!(GridTaxonomy::from_json(&tax.to_json()).unwrap(), tax);
    }

    #[test]
    fn parses_type_names() {
        for t in GridType::ALL {
            assert_eq!(t.as_str().parse::<GridType>(), Ok(t));
        }
        assert!("forest".parse::<GridType>().is_err());
    }
}
