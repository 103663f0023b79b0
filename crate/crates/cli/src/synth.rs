//! Seeded synthetic benchmark: grids of seven archetypes, scenario files and
//! a runtime table whose fastest solver follows a planted rule.
//!
//! The rule reads two hand-crafted features of the instance, agent density
//! `d` and mean shortest-path length `L`:
//!
//! | region | fastest |
//! |---|---|
//! | `d < d1`, `L < l1` | solver 0 |
//! | `d < d1`, `L ≥ l1` | solver 1 |
//! | `d1 ≤ d < d2` | solver 3 |
//! | `d ≥ d2`, `L < l1` | solver 2 |
//! | `d ≥ d2`, `L ≥ l1` | solver 4 |
//!
//! With `noise > 0` that fraction of instances gets a different, uniformly
//! drawn fastest solver.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use mapf_select::benchmark::{
    write_results, write_scen, GridMap, InstanceKey, Portfolio, RuntimeRecord, ScenarioEntry,
    SolverOutcome, RUNTIME_CAP_MIN,
};
use mapf_select::eval::GridType;
use mapf_select::kbs::kbs_features;
use mapf_select::mapf::{shortest_path, CellGraph, MapfInstance};
use mapf_select::pipeline::write_atomic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub grids_per_type: usize,
    pub scenarios_per_grid: usize,
    pub agent_counts_per_scenario: usize,
    pub entries_per_scenario: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub density_range: (f64, f64),
    pub density_thresholds: (f64, f64),
    pub length_threshold: f64,
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            grids_per_type: 4,
            scenarios_per_grid: 8,
            agent_counts_per_scenario: 9,
            entries_per_scenario: 100,
            min_size: 24,
            max_size: 40,
            density_range: (0.002, 0.06),
            density_thresholds: (0.018, 0.04),
            length_threshold: 22.0,
            noise: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.grids_per_type == 0
            || self.scenarios_per_grid == 0
            || self.agent_counts_per_scenario == 0
        {
            return Err("grid, scenario and agent counts must be positive".into());
        }
        if self.min_size < 8 || self.min_size > self.max_size {
            return Err("sizes must satisfy 8 ≤ min_size ≤ max_size".into());
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err("noise must lie in [0, 1]".into());
        }
        let (lo, hi) = self.density_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err("density_range must satisfy 0 < lo ≤ hi < 1".into());
        }
        Ok(())
    }

    /// The planted fastest solver for density `d` and mean path length `l`.
    pub fn planted(&self, d: f64, l: f64) -> usize {
        let (d1, d2) = self.density_thresholds;
        let long = l >= self.length_threshold;
        if d < d1 {
            usize::from(long)
        } else if d < d2 {
            3
        } else if long {
            4
        } else {
            2
        }
    }
}

pub struct SynthInstance {
    pub key: InstanceKey,
    pub grid_type: GridType,
    pub density: f64,
    pub mean_length: f64,
    pub planted: usize,
    pub label: usize,
}

pub struct SynthBenchmark {
    pub grids: Vec<(GridType, Arc<GridMap>)>,
    /// `(grid index, scenario name, entries)`.
    pub scenarios: Vec<(usize, String, Vec<ScenarioEntry>)>,
    pub records: Vec<RuntimeRecord>,
    pub instances: Vec<SynthInstance>,
}

impl SynthBenchmark {
    /// Writes `maps/`, `scens/`, `results.csv` and `taxonomy.json` under `dir`.
    pub fn write(&self, dir: &Path, portfolio: &Portfolio) -> Result<()> {
        let maps = dir.join("maps");
        let scens = dir.join("scens");
        fs::create_dir_all(&maps).with_context(|| format!("creating {}", maps.display()))?;
        fs::create_dir_all(&scens).with_context(|| format!("creating {}", scens.display()))?;
        for (_, grid) in &self.grids {
            write_atomic(
                &maps.join(format!("{}.map", grid.name())),
                grid.to_map_string().as_bytes(),
            )?;
        }
        for (_, name, entries) in &self.scenarios {
            write_atomic(
                &scens.join(format!("{name}.scen")),
                write_scen(entries).as_bytes(),
            )?;
        }
        write_atomic(
            &dir.join("results.csv"),
            write_results(&self.records, portfolio).as_bytes(),
        )?;
        let taxonomy: std::collections::BTreeMap<&str, GridType> =
            self.grids.iter().map(|(t, g)| (g.name(), *t)).collect();
        write_atomic(
            &dir.join("taxonomy.json"),
            serde_json::to_string_pretty(&taxonomy)?.as_bytes(),
        )?;
        Ok(())
    }
}

fn neighbors8(open: &[bool], w: usize, h: usize, x: usize, y: usize) -> usize {
    let mut blocked = 0;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0
                || ny < 0
                || nx >= w as i64
                || ny >= h as i64
                || !open[ny as usize * w + nx as usize]
            {
                blocked += 1;
            }
        }
    }
    blocked
}

fn generate_grid(kind: GridType, w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut open = vec![true; w * h];
    let idx = |x: usize, y: usize| y * w + x;
    match kind {
        GridType::Empty => {}
        GridType::Random => {
            let p = rng.random_range(0.10..0.25);
            open.iter_mut().for_each(|c| *c = rng.random::<f64>() >= p);
        }
        GridType::Warehouse => {
            let shelf = rng.random_range(5..=8);
            let margin = 2;
            for y in margin..h - margin {
                if (y - margin) % 3 != 0 {
                    continue;
                }
                for x in margin..w - margin {
                    if (x - margin) % (shelf + 2) < shelf {
                        open[idx(x, y)] = false;
                    }
                }
            }
        }
        GridType::Room => {
            let r = rng.random_range(6..=8);
            for y in 0..h {
                for x in 0..w {
                    if (x % r == 0 || y % r == 0) && x > 0 && y > 0 {
                        open[idx(x, y)] = false;
                    }
                }
            }
            // one or two doors in every wall segment
            for cy in (r..h).step_by(r) {
                for x0 in (0..w).step_by(r) {
                    let span = (x0 + 1..(x0 + r).min(w)).collect::<Vec<_>>();
                    for _ in 0..rng.random_range(1..=2) {
                        if let Some(&x) = span.choose(rng) {
                            open[idx(x, cy)] = true;
                        }
                    }
                }
            }
            for cx in (r..w).step_by(r) {
                for y0 in (0..h).step_by(r) {
                    let span = (y0 + 1..(y0 + r).min(h)).collect::<Vec<_>>();
                    for _ in 0..rng.random_range(1..=2) {
                        if let Some(&y) = span.choose(rng) {
                            open[idx(cx, y)] = true;
                        }
                    }
                }
            }
        }
        GridType::Maze => {
            let cw = rng.random_range(1..=2);
            let step = cw + 1;
            let (cols, rows) = ((w - 1) / step, (h - 1) / step);
            open.fill(false);
            let carve = |open: &mut Vec<bool>, cx: usize, cy: usize| {
                for y in 0..cw {
                    for x in 0..cw {
                        open[idx(1 + cx * step + x, 1 + cy * step + y)] = true;
                    }
                }
            };
            let mut seen = vec![false; cols * rows];
            let mut stack = vec![(0usize, 0usize)];
            seen[0] = true;
            carve(&mut open, 0, 0);
            while let Some(&(cx, cy)) = stack.last() {
                let mut next = Vec::new();
                if cy > 0 && !seen[(cy - 1) * cols + cx] {
                    next.push((cx, cy - 1));
                }
                if cx > 0 && !seen[cy * cols + cx - 1] {
                    next.push((cx - 1, cy));
                }
                if cx + 1 < cols && !seen[cy * cols + cx + 1] {
                    next.push((cx + 1, cy));
                }
                if cy + 1 < rows && !seen[(cy + 1) * cols + cx] {
                    next.push((cx, cy + 1));
                }
                let Some(&(nx, ny)) = next.choose(rng) else {
                    stack.pop();
                    continue;
                };
                seen[ny * cols + nx] = true;
                carve(&mut open, nx, ny);
                // open the wall between the two cells
                let (x0, y0) = (1 + cx.min(nx) * step, 1 + cy.min(ny) * step);
                for t in 0..cw {
                    if nx != cx {
                        open[idx(x0 + cw, y0 + t)] = true;
                    } else {
                        open[idx(x0 + t, y0 + cw)] = true;
                    }
                }
                stack.push((nx, ny));
            }
        }
        GridType::City => {
            let block = rng.random_range(5..=7);
            let street = 2;
            let period = block + street;
            for y in 0..h {
                for x in 0..w {
                    if x % period >= street && y % period >= street {
                        open[idx(x, y)] = false;
                    }
                }
            }
            // parks and notches
            for by in (street..h).step_by(period) {
                for bx in (street..w).step_by(period) {
                    let u = rng.random::<f64>();
                    for y in by..(by + block).min(h) {
                        for x in bx..(bx + block).min(w) {
                            if u < 0.2 || (u < 0.6 && rng.random::<f64>() < 0.15) {
                                open[idx(x, y)] = true;
                            }
                        }
                    }
                }
            }
        }
        GridType::Game => {
            open.iter_mut()
                .for_each(|c| *c = rng.random::<f64>() >= 0.40);
            for _ in 0..4 {
                let prev = open.clone();
                for y in 0..h {
                    for x in 0..w {
                        open[idx(x, y)] = neighbors8(&prev, w, h, x, y) < 5;
                    }
                }
            }
        }
    }
    open
}

fn type_token(kind: GridType) -> &'static str {
    kind.as_str()
}

/// Passable cells of the largest connected component.
fn largest_component(grid: &GridMap) -> Vec<usize> {
    let graph = CellGraph::new(grid);
    let n = graph.num_nodes();
    let mut comp = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut members = vec![s];
        comp[s] = s;
        let mut head = 0;
        while head < members.len() {
            let v = members[head];
            head += 1;
            for u in graph.neighbors(v) {
                if comp[u] == usize::MAX {
                    comp[u] = s;
                    members.push(u);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    let mut cells: Vec<usize> = best.into_iter().map(|v| graph.cell(v)).collect();
    cells.sort_unstable();
    cells
}

fn scenario_entries(grid: &GridMap, count: usize, rng: &mut ChaCha8Rng) -> Vec<ScenarioEntry> {
    let cells = largest_component(grid);
    let count = count.min(cells.len());
    let mut starts = cells.clone();
    starts.shuffle(rng);
    let mut goals = cells;
    goals.shuffle(rng);
    starts
        .iter()
        .zip(&goals)
        .take(count)
        .map(|(&s, &g)| {
            let len = shortest_path(grid, s, g).expect("same component").moves();
            ScenarioEntry {
                bucket: (len / 4) as u32,
                map_name: format!("{}.map", grid.name()),
                map_width: grid.width(),
                map_height: grid.height(),
                start: grid.coords(s),
                goal: grid.coords(g),
                optimal_length: len as f64,
            }
        })
        .collect()
}

/// Builds the benchmark in memory. Deterministic in `seed`.
pub fn generate(config: &SynthConfig, portfolio: &Portfolio, seed: u64) -> Result<SynthBenchmark> {
    config.validate().map_err(anyhow::Error::msg)?;
    anyhow::ensure!(
        portfolio.len() >= 5,
        "the planted rule needs a portfolio of at least 5 solvers"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SynthBenchmark {
        grids: Vec::new(),
        scenarios: Vec::new(),
        records: Vec::new(),
        instances: Vec::new(),
    };
    for kind in GridType::ALL {
        for g in 0..config.grids_per_type {
            let w = rng.random_range(config.min_size..=config.max_size);
            let h = rng.random_range(config.min_size..=config.max_size);
            let name = format!("{}-{w}-{h}-{g}", type_token(kind));
            let open = generate_grid(kind, w, h, &mut rng);
            let grid = Arc::new(GridMap::from_passable(&name, w, h, &open));
            let grid_index = out.grids.len();
            out.grids.push((kind, grid.clone()));
            for s in 0..config.scenarios_per_grid {
                let scen_name = format!("{name}-even-{}", s + 1);
                let entries = scenario_entries(&grid, config.entries_per_scenario, &mut rng);
                let passable = grid.passable_count() as f64;
                let mut counts = BTreeSet::new();
                for _ in 0..config.agent_counts_per_scenario * 20 {
                    if counts.len() == config.agent_counts_per_scenario {
                        break;
                    }
                    let d = rng.random_range(config.density_range.0..=config.density_range.1);
                    counts.insert(((d * passable).round() as usize).clamp(1, entries.len()));
                }
                for &k in &counts {
                    let instance = MapfInstance::from_scenario(grid.clone(), &entries, k)
                        .map_err(|e| anyhow::anyhow!("synthetic instance {scen_name}/{k}: {e}"))?;
                    let features = kbs_features(&instance);
                    let d = features.get("agent_density").expect("known feature");
                    let l = features.get("sp_len_mean").expect("known feature");
                    let planted = config.planted(d, l);
                    let label = if rng.random::<f64>() < config.noise {
                        let other = rng.random_range(0..portfolio.len() - 1);
                        if other >= planted {
                            other + 1
                        } else {
                            other
                        }
                    } else {
                        planted
                    };
                    let base = ((0.01 + 0.002 * k as f64 * l / 10.0) * rng.random_range(0.8..1.2))
                        .min(3.0);
                    let mut solver_runtimes = std::collections::BTreeMap::new();
                    for (i, solver) in portfolio.names().iter().enumerate() {
                        let outcome = if i == label {
                            SolverOutcome {
                                runtime_min: round6(base),
                                solved: true,
                            }
                        } else {
                            let r = round6(base * rng.random_range(1.2..4.2));
                            if r >= RUNTIME_CAP_MIN {
                                SolverOutcome::UNSOLVED
                            } else {
                                SolverOutcome {
                                    runtime_min: r,
                                    solved: true,
                                }
                            }
                        };
                        solver_runtimes.insert(solver.clone(), outcome);
                    }
                    let key = InstanceKey::new(name.clone(), scen_name.clone(), k);
                    out.records.push(RuntimeRecord {
                        key: key.clone(),
                        solver_runtimes,
                    });
                    out.instances.push(SynthInstance {
                        key,
                        grid_type: kind,
                        density: d,
                        mean_length: l,
                        planted,
                        label,
                    });
                }
                out.scenarios.push((grid_index, scen_name, entries));
            }
        }
    }
    Ok(out)
}

// Keeps the CSV short; distinct runtimes stay distinct after rounding
// because the multipliers are at least 1.2.
fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;
    use mapf_select::benchmark::{parse_map, parse_scen};

    fn small() -> SynthConfig {
        SynthConfig {
            grids_per_type: 1,
            scenarios_per_grid: 2,
            agent_counts_per_scenario: 3,
            entries_per_scenario: 30,
            ..Default::default()
        }
    }

    #[test]
    fn archetypes_round_trip_through_the_parsers() {
        let bench = generate(&small(), &Portfolio::default(), 3).unwrap();
        assert_eq!(bench.grids.len(), 7);
        for (grid_index, _, entries) in &bench.scenarios {
            let grid = &bench.grids[*grid_index].1;
            let parsed = parse_map(grid.name(), grid.to_map_string().as_bytes()).unwrap();
            assert_eq!(&parsed, grid.as_ref());
            assert_eq!(
                &parse_scen(write_scen(entries).as_bytes(), &parsed).unwrap(),
                entries
            );
        }
    }

    #[test]
    fn zero_noise_labels_are_planted() {
        let bench = generate(&small(), &Portfolio::default(), 5).unwrap();
        assert!(bench.instances.iter().all(|i| i.label == i.planted));
        for (rec, inst) in bench.records.iter().zip(&bench.instances) {
            let outcomes = rec.aligned(&Portfolio::default());
            let fastest = (0..5)
                .min_by(|&a, &b| outcomes[a].runtime_min.total_cmp(&outcomes[b].runtime_min))
                .unwrap();
            assert_eq!(fastest, inst.label);
            assert!(outcomes[inst.label].solved);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&small(), &Portfolio::default(), 9).unwrap();
        let b = generate(&small(), &Portfolio::default(), 9).unwrap();
        let c = generate(&small(), &Portfolio::default(), 10).unwrap();
        let csv = |x: &SynthBenchmark| write_results(&x.records, &Portfolio::default());
        assert_eq!(csv(&a), csv(&b));
        assert_ne!(csv(&a), csv(&c));
    }

    #[test]
    fn noise_moves_labels_off_the_rule() {
        let config = SynthConfig {
            noise: 1.0,
            ..small()
        };
        let bench = generate(&config, &Portfolio::default(), 1).unwrap();
        assert!(bench.instances.iter().all(|i| i.label != i.planted));
    }
}
