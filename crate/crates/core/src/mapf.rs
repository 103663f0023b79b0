//! MAPF instances `<k, G, s, t>` over 4-connected grids, and the single-agent
//! shortest paths that both graph encodings and the hand-crafted features
//! are built from.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use crate::benchmark::{CellId, GridMap, ScenarioEntry};

const NO_NODE: u32 = u32::MAX;

/// The undirected 4-neighbourhood graph over the passable cells of a grid.
///
/// Nodes are numbered row-major over passable cells, so node order agrees
/// with cell order and every adjacency list is ascending.
#[derive(Clone, Debug)]
pub struct CellGraph {
    node_of_cell: Vec<u32>,
    cell_of_node: Vec<CellId>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl CellGraph {
    pub fn new(grid: &GridMap) -> Self {
        let mut node_of_cell = vec![NO_NODE; grid.num_cells()];
        let mut cell_of_node = Vec::new();
        for cell in 0..grid.num_cells() {
            if grid.is_passable(cell) {
                node_of_cell[cell] = cell_of_node.len() as u32;
                cell_of_node.push(cell);
            }
        }
        let mut offsets = Vec::with_capacity(cell_of_node.len() + 1);
        let mut neighbors = Vec::with_capacity(cell_of_node.len() * 4);
        offsets.push(0);
        for &cell in &cell_of_node {
            // Up, Left, Right, Down is ascending in row-major order.
            neighbors.extend(grid.neighbors(cell).map(|c| node_of_cell[c]));
            offsets.push(neighbors.len());
        }
        Self {
            node_of_cell,
            cell_of_node,
            offsets,
            neighbors,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.cell_of_node.len()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn node(&self, cell: CellId) -> Option<usize> {
        match self.node_of_cell.get(cell) {
            Some(&n) if n != NO_NODE => Some(n as usize),
            _ => None,
        }
    }

    pub fn cell(&self, node: usize) -> CellId {
        self.cell_of_node[node]
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cell_of_node
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[self.offsets[node]..self.offsets[node + 1]]
            .iter()
            .map(|&n| n as usize)
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Every edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Sizes of the connected components, in order of their smallest node.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root);
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }
}

/// The 4-connected adjacency structure over the passable cells of `grid`.
pub fn cell_graph(grid: &GridMap) -> CellGraph {
    CellGraph::new(grid)
}

/// A single-agent shortest path that ignores all other agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentPath {
    pub agent: usize,
    /// Source first, target last.
    pub cells: Vec<CellId>,
}

impl AgentPath {
    /// Number of moves, one less than the number of cells.
    pub fn moves(&self) -> usize {
        self.cells.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no path from cell {source_cell} to cell {target}")]
pub struct NoPathError {
    pub source_cell: CellId,
    pub target: CellId,
}

/// Breadth-first shortest path from `source` to `target`.
///
/// Neighbours are expanded Up, Left, Right, Down and a cell keeps the parent
/// that discovered it first, so the returned path is fully determined by the
/// grid and the endpoints. The returned path's `agent` is 0.
pub fn shortest_path(
    grid: &GridMap,
    source: CellId,
    target: CellId,
) -> Result<AgentPath, NoPathError> {
    let no_path = NoPathError {
        source_cell: source,
        target,
    };
    if !grid.is_passable(source) || !grid.is_passable(target) {
        return Err(no_path);
    }
    if source == target {
        return Ok(AgentPath {
            agent: 0,
            cells: vec![source],
        });
    }
    const UNSEEN: usize = usize::MAX;
    let mut parent = vec![UNSEEN; grid.num_cells()];
    parent[source] = source;
    let mut queue = VecDeque::from([source]);
    'search: while let Some(cell) = queue.pop_front() {
        for next in grid.neighbors(cell) {
            if parent[next] == UNSEEN {
                parent[next] = cell;
                if next == target {
                    break 'search;
                }
                queue.push_back(next);
            }
        }
    }
    if parent[target] == UNSEEN {
        return Err(no_path);
    }
    let mut cells = vec![target];
    let mut cur = target;
    while cur != source {
        cur = parent[cur];
        cells.push(cur);
    }
    cells.reverse();
    Ok(AgentPath { agent: 0, cells })
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("an instance needs at least one agent")]
    NoAgents,
    #[error("{sources} sources but {targets} targets")]
    LengthMismatch { sources: usize, targets: usize },
    #[error("agent {agent}: cell {cell} is outside the grid")]
    OutOfBounds { agent: usize, cell: CellId },
    #[error("agent {agent}: cell {cell} is blocked")]
    Blocked { agent: usize, cell: CellId },
    #[error("agents {first} and {second} share source cell {cell}")]
    DuplicateSource {
        first: usize,
        second: usize,
        cell: CellId,
    },
    #[error("agents {first} and {second} share target cell {cell}")]
    DuplicateTarget {
        first: usize,
        second: usize,
        cell: CellId,
    },
    #[error("agent {agent}: target unreachable from source")]
    Unreachable { agent: usize },
    #[error("scenario holds {available} agents, {requested} requested")]
    NotEnoughAgents { requested: usize, available: usize },
}

/// A MAPF instance: `k` agents on a grid with distinct sources and distinct
/// targets, every target reachable from its source.
///
/// The per-agent shortest paths are computed once at construction.
#[derive(Clone, Debug)]
pub struct MapfInstance {
    grid: Arc<GridMap>,
    sources: Vec<CellId>,
    targets: Vec<CellId>,
    paths: Vec<AgentPath>,
}

impl MapfInstance {
    pub fn new(
        grid: Arc<GridMap>,
        sources: Vec<CellId>,
        targets: Vec<CellId>,
    ) -> Result<Self, InstanceError> {
        if sources.len() != targets.len() {
            return Err(InstanceError::LengthMismatch {
                sources: sources.len(),
                targets: targets.len(),
            });
        }
        if sources.is_empty() {
            return Err(InstanceError::NoAgents);
        }
        for (agent, &cell) in sources.iter().chain(&targets).enumerate() {
            let agent = agent % sources.len();
            if cell >= grid.num_cells() {
                return Err(InstanceError::OutOfBounds { agent, cell });
            }
            if !grid.is_passable(cell) {
                return Err(InstanceError::Blocked { agent, cell });
            }
        }
        first_duplicate(&sources).map_or(Ok(()), |(first, second, cell)| {
            Err(InstanceError::DuplicateSource {
                first,
                second,
                cell,
            })
        })?;
        first_duplicate(&targets).map_or(Ok(()), |(first, second, cell)| {
            Err(InstanceError::DuplicateTarget {
                first,
                second,
                cell,
            })
        })?;

        let paths = sources
            .iter()
            .zip(&targets)
            .enumerate()
            .map(|(agent, (&s, &t))| {
                shortest_path(&grid, s, t)
                    .map(|p| AgentPath {
                        agent,
                        cells: p.cells,
                    })
                    .map_err(|_| InstanceError::Unreachable { agent })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            grid,
            sources,
            targets,
            paths,
        })
    }

    /// The instance formed by the first `k` entries of a scenario.
    pub fn from_scenario(
        grid: Arc<GridMap>,
        entries: &[ScenarioEntry],
        k: usize,
    ) -> Result<Self, InstanceError> {
        if k > entries.len() {
            return Err(InstanceError::NotEnoughAgents {
                requested: k,
                available: entries.len(),
            });
        }
        let sources = entries[..k].iter().map(|e| e.start_cell(&grid)).collect();
        let targets = entries[..k].iter().map(|e| e.goal_cell(&grid)).collect();
        Self::new(grid, sources, targets)
    }

    /// Number of agents.
    pub fn k(&self) -> usize {
        self.sources.len()
    }

    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<GridMap> {
        &self.grid
    }

    pub fn sources(&self) -> &[CellId] {
        &self.sources
    }

    pub fn targets(&self) -> &[CellId] {
        &self.targets
    }

    /// One deterministic shortest path per agent, in agent order.
    pub fn paths(&self) -> &[AgentPath] {
        &self.paths
    }
}

fn first_duplicate(cells: &[CellId]) -> Option<(usize, usize, CellId)> {
    let mut seen = std::collections::HashMap::with_capacity(cells.len());
    for (i, &c) in cells.iter().enumerate() {
        if let Some(&first) = seen.get(&c) {
            return Some((first, i, c));
        }
        seen.insert(c, i);
    }
    None
}

/// Cells on at least one agent's path, ascending.
pub(crate) fn path_cell_union(paths: &[AgentPath]) -> Vec<CellId> {
    let set: HashSet<CellId> = paths.iter().flat_map(|p| p.cells.iter().copied()).collect();
    let mut cells: Vec<_> = set.into_iter().collect();
    cells.sort_unstable();
    cells
}
