//! Twenty hand-crafted MAPF features describing grid geometry, agent
//! density, single-agent path statistics, path interaction and topology.
//!
//! | # | name | definition |
//! |---|------|------------|
//! | 1 | `grid_width` | columns |
//! | 2 | `grid_height` | rows |
//! | 3 | `passable_cells` | unblocked cells |
//! | 4 | `obstacle_density` | blocked / (width · height) |
//! | 5 | `num_agents` | k |
//! | 6 | `agent_density` | k / passable |
//! | 7–10 | `sp_len_{mean,max,min,std}` | shortest-path lengths (moves) |
//! | 11 | `sp_len_sum_per_cell` | Σ path length / passable |
//! | 12 | `shared_path_cells` | cells on ≥ 2 agents' paths |
//! | 13 | `path_overlap_ratio` | shared cells / cells on any path |
//! | 14–15 | `manhattan_{mean,std}` | start-goal Manhattan distance |
//! | 16 | `detour_factor` | mean of path length / Manhattan (1 if both 0) |
//! | 17 | `components` | connected components of the passable graph |
//! | 18 | `corridor_fraction` | passable cells of degree ≤ 2 |
//! | 19 | `open_fraction` | passable cells of degree 4 |
//! | 20 | `largest_component_fraction` | largest component / passable |
//!
//! Standard deviations are population deviations. Path statistics use the
//! same deterministic shortest paths as the G2V encoding.

use std::collections::HashMap;

use crate::mapf::{CellGraph, MapfInstance};

pub const KBS_DIM: usize = 20;

pub const KBS_FEATURE_NAMES: [&str; KBS_DIM] = [
    "grid_width",
    "grid_height",
    "passable_cells",
    "obstacle_density",
    "num_agents",
    "agent_density",
    "sp_len_mean",
    "sp_len_max",
    "sp_len_min",
    "sp_len_std",
    "sp_len_sum_per_cell",
    "shared_path_cells",
    "path_overlap_ratio",
    "manhattan_mean",
    "manhattan_std",
    "detour_factor",
    "components",
    "corridor_fraction",
    "open_fraction",
    "largest_component_fraction",
];

#[derive(Clone, Debug, PartialEq)]
pub struct KbsFeatures {
    pub values: [f64; KBS_DIM],
}

impl KbsFeatures {
    pub fn names() -> &'static [&'static str; KBS_DIM] {
        &KBS_FEATURE_NAMES
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        KBS_FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn kbs_features(instance: &MapfInstance) -> KbsFeatures {
    let grid = instance.grid();
    let graph = CellGraph::new(grid);
    let (w, h) = (grid.width() as f64, grid.height() as f64);
    let passable = graph.num_nodes() as f64;
    let k = instance.k() as f64;

    let lengths: Vec<f64> = instance.paths().iter().map(|p| p.moves() as f64).collect();
    let (sp_mean, sp_std) = mean_std(&lengths);
    let sp_max = lengths.iter().copied().fold(f64::MIN, f64::max);
    let sp_min = lengths.iter().copied().fold(f64::MAX, f64::min);
    let sp_sum: f64 = lengths.iter().sum();

    // Distinct agents per cell.
    let mut visits: HashMap<usize, usize> = HashMap::new();
    for path in instance.paths() {
        let mut cells = path.cells.clone();
        cells.sort_unstable();
        cells.dedup();
        for c in cells {
            *visits.entry(c).or_default() += 1;
        }
    }
    let shared = visits.values().filter(|&&n| n >= 2).count() as f64;
    let overlap = shared / visits.len() as f64;

    let manhattan: Vec<f64> = instance
        .sources()
        .iter()
        .zip(instance.targets())
        .map(|(&s, &t)| {
            let (sx, sy) = grid.coords(s);
            let (tx, ty) = grid.coords(t);
            (sx.abs_diff(tx) + sy.abs_diff(ty)) as f64
        })
        .collect();
    let (man_mean, man_std) = mean_std(&manhattan);
    let detours: Vec<f64> = lengths
        .iter()
        .zip(&manhattan)
        .map(|(&len, &m)| if m == 0.0 { 1.0 } else { len / m })
        .collect();
    let detour = detours.iter().sum::<f64>() / detours.len() as f64;

    let components = graph.component_sizes();
    let largest = components.iter().copied().max().unwrap_or(0) as f64;
    let corridor = (0..graph.num_nodes())
        .filter(|&v| graph.degree(v) <= 2)
        .count() as f64;
    let open = (0..graph.num_nodes())
        .filter(|&v| graph.degree(v) == 4)
        .count() as f64;

    KbsFeatures {
        values: [
            w,
            h,
            passable,
            (w * h - passable) / (w * h),
            k,
            k / passable,
            sp_mean,
            sp_max,
            sp_min,
            sp_std,
            sp_sum / passable,
            shared,
            overlap,
            man_mean,
            man_std,
            detour,
            components.len() as f64,
            corridor / passable,
            open / passable,
            largest / passable,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::GridMap;
    use std::sync::Arc;

    fn open_grid(w: usize, h: usize) -> Arc<GridMap> {
        Arc::new(GridMap::from_passable("open", w, h, &vec![true; w * h]))
    }

    #[test]
    fn agent_density_on_open_grid() {
        let grid = open_grid(8, 8);
        let inst = MapfInstance::new(grid, vec![0, 1, 2, 3], vec![60, 61, 62, 63]).unwrap();
        let f = kbs_features(&inst);
        assert_eq!(f.values[5], 0.0625);
        assert_eq!(f.values[15], 1.0);
        assert_eq!(f.values[16], 1.0);
        assert_eq!(f.values[19], 1.0);
    }

    #[test]
    fn single_agent_corridor_statistics() {
        let grid = Arc::new(GridMap::from_rows("c", &["....."]).unwrap());
        let f = kbs_features(&MapfInstance::new(grid, vec![0], vec![4]).unwrap());
        assert_eq!(&f.values[6..10], &[4.0, 4.0, 4.0, 0.0]);
        assert_eq!(f.values[17], 1.0);
        assert_eq!(f.values[18], 0.0);
    }

    #[test]
    fn overlap_counts_cells_shared_by_two_agents() {
        let grid = Arc::new(GridMap::from_rows("c", &["....."]).unwrap());
        // agent 0 covers 0..=3, agent 1 covers 2..=4
        let f = kbs_features(&MapfInstance::new(grid, vec![0, 4], vec![3, 2]).unwrap());
        assert_eq!(f.values[11], 2.0);
        assert_eq!(f.values[12], 2.0 / 5.0);
    }

    #[test]
    fn detour_exceeds_one_around_a_wall() {
        let grid = Arc::new(GridMap::from_rows("w", &["...", ".@.", ".@.", "..."]).unwrap());
        let s = grid.cell(0, 1);
        let t = grid.cell(2, 1);
        let f = kbs_features(&MapfInstance::new(grid, vec![s], vec![t]).unwrap());
        assert_eq!(f.values[15], 2.0);
        assert_eq!(f.values[3], 2.0 / 12.0);
    }

    #[test]
    fn component_statistics() {
        let grid = Arc::new(GridMap::from_rows("w", &["..@.", "..@@"]).unwrap());
        let f = kbs_features(&MapfInstance::new(grid, vec![0], vec![5]).unwrap());
        assert_eq!(f.values[16], 2.0);
        assert_eq!(f.values[19], 4.0 / 5.0);
        assert_eq!(f.get("components"), Some(2.0));
    }
}
