//! Graph encodings of a MAPF instance.
//!
//! * **G2V** keeps only the cells on the agents' shortest paths and every grid
//!   edge between two such cells. The result may be disconnected.
//! * **FG2V** keeps the whole grid graph and adds one artificial edge from
//!   each agent's source to its target.
//!
//! Both produce a simple undirected [`EncodedGraph`] whose nodes are numbered
//! by ascending cell id.

use std::fmt::Write as _;

use crate::benchmark::CellId;
use crate::mapf::{path_cell_union, CellGraph, MapfInstance};

/// A simple undirected graph with dense node ids `0..num_nodes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedGraph {
    num_nodes: usize,
    /// `(u, v)` with `u < v`, sorted, no duplicates.
    edges: Vec<(u32, u32)>,
    /// Original grid cell of each node; empty for graphs not built from a grid.
    node_origin: Vec<CellId>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) references a node outside 0..{num_nodes}")]
    NodeOutOfRange {
        u: usize,
        v: usize,
        num_nodes: usize,
    },
    #[error("edge list line {line}: {message}")]
    Format { line: usize, message: String },
}

impl EncodedGraph {
    /// Builds a simple graph. Edges are undirected; duplicates collapse.
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::NodeOutOfRange { u, v, num_nodes });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            list.push((u.min(v) as u32, u.max(v) as u32));
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self {
            num_nodes,
            edges: list,
            node_origin: Vec::new(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(u, v)| (u as usize, v as usize))
    }

    pub fn node_origin(&self) -> &[CellId] {
        &self.node_origin
    }

    /// Sorted adjacency lists in CSR form: `(offsets, neighbours)`.
    pub fn adjacency(&self) -> (Vec<usize>, Vec<u32>) {
        let mut degree = vec![0usize; self.num_nodes];
        for &(u, v) in &self.edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(self.num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..self.num_nodes].to_vec();
        let mut neighbors = vec![0u32; offsets[self.num_nodes]];
        // Edges are sorted by (u, v), so pushing in this order leaves every
        // list ascending: for node w, neighbours below w arrive as `v` of
        // earlier edges before any neighbour above w arrives as `v` of (w, _).
        for &(u, v) in &self.edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        (offsets, neighbors)
    }

    /// Debug export: node count on the first line, then `u v` per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_nodes);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let num_nodes = match lines.next() {
            Some((_, l)) => l.trim().parse::<usize>().map_err(|_| GraphError::Format {
                line: 1,
                message: "first line must hold the node count".into(),
            })?,
            None => {
                return Err(GraphError::Format {
                    line: 1,
                    message: "empty edge list".into(),
                })
            }
        };
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let parts: Vec<_> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [u, v] => u.parse::<usize>().ok().zip(v.parse::<usize>().ok()),
                _ => None,
            };
            edges.push(parsed.ok_or_else(|| GraphError::Format {
                line: idx + 1,
                message: format!("expected `u v`, got `{line}`"),
            })?);
        }
        Self::from_edges(num_nodes, edges)
    }
}

/// Which encoding to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoder {
    G2v,
    Fg2v,
}

impl Encoder {
    pub fn encode(self, instance: &MapfInstance) -> EncodedGraph {
        match self {
            Encoder::G2v => encode_g2v(instance),
            Encoder::Fg2v => encode_fg2v(instance),
        }
    }
}

/// The subgraph induced by the cells on the agents' shortest paths.
pub fn encode_g2v(instance: &MapfInstance) -> EncodedGraph {
    let grid = instance.grid();
    let cells = path_cell_union(instance.paths());
    let mut node_of_cell = std::collections::HashMap::with_capacity(cells.len());
    for (node, &cell) in cells.iter().enumerate() {
        node_of_cell.insert(cell, node as u32);
    }
    let mut edges = Vec::new();
    for (node, &cell) in cells.iter().enumerate() {
        let (x, y) = grid.coords(cell);
        // right and down neighbours list each grid edge exactly once
        let right = (x + 1 < grid.width()).then(|| cell + 1);
        let down = (y + 1 < grid.height()).then(|| cell + grid.width());
        for other in [right, down].into_iter().flatten() {
            if let Some(&m) = node_of_cell.get(&other) {
                edges.push((node as u32, m));
            }
        }
    }
    edges.sort_unstable();
    EncodedGraph {
        num_nodes: cells.len(),
        edges,
        node_origin: cells,
    }
}

/// The full grid graph plus one artificial source-target edge per agent.
/// Agents whose source equals their target add nothing.
pub fn encode_fg2v(instance: &MapfInstance) -> EncodedGraph {
    let graph = CellGraph::new(instance.grid());
    let mut edges: Vec<(u32, u32)> = graph.edges().map(|(u, v)| (u as u32, v as u32)).collect();
    for (&s, &t) in instance.sources().iter().zip(instance.targets()) {
        if s == t {
            continue;
        }
        // validated passable at instance construction
        let a = graph.node(s).expect("source is passable") as u32;
        let b = graph.node(t).expect("target is passable") as u32;
        edges.push((a.min(b), a.max(b)));
    }
    edges.sort_unstable();
    edges.dedup();
    EncodedGraph {
        num_nodes: graph.num_nodes(),
        edges,
        node_origin: graph.cells().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::GridMap;
    use std::sync::Arc;

    fn instance(rows: &[&str], pairs: &[((usize, usize), (usize, usize))]) -> MapfInstance {
        let grid = Arc::new(GridMap::from_rows("t", rows).unwrap());
        let sources = pairs.iter().map(|&((x, y), _)| grid.cell(x, y)).collect();
        let targets = pairs.iter().map(|&(_, (x, y))| grid.cell(x, y)).collect();
        MapfInstance::new(grid, sources, targets).unwrap()
    }

    #[test]
    fn g2v_corridor() {
        let inst = instance(&["....."], &[((0, 0), (4, 0))]);
        let g = encode_g2v(&inst);
        assert_eq!((g.num_nodes(), g.num_edges()), (5, 4));
    }

    #[test]
    fn g2v_union_is_idempotent() {
        // Sources must be distinct, so the second agent covers the same cells
        // in the opposite direction.
        let one = instance(&["....."], &[((0, 0), (4, 0))]);
        let two = instance(&["....."], &[((0, 0), (4, 0)), ((4, 0), (0, 0))]);
        assert_eq!(encode_g2v(&one), encode_g2v(&two));
    }

    #[test]
    fn g2v_parallel_corridors_disconnected() {
        let inst = instance(
            &[".....", "@@@@@", "....."],
            &[((0, 0), (4, 0)), ((0, 2), (4, 2))],
        );
        let g = encode_g2v(&inst);
        assert_eq!((g.num_nodes(), g.num_edges()), (10, 8));
        assert_eq!(g.node_origin(), &[0, 1, 2, 3, 4, 10, 11, 12, 13, 14]);
    }

    #[test]
    fn fg2v_square_with_diagonal() {
        let inst = instance(&["..", ".."], &[((0, 0), (1, 1))]);
        let g = encode_fg2v(&inst);
        assert_eq!((g.num_nodes(), g.num_edges()), (4, 5));
        assert!(g.edges().any(|e| e == (0, 3)));
    }

    #[test]
    fn fg2v_adjacent_pair_collapses() {
        let inst = instance(&["..", ".."], &[((0, 0), (1, 0))]);
        assert_eq!(encode_fg2v(&inst).num_edges(), 4);
    }

    #[test]
    fn fg2v_self_pair_adds_nothing() {
        let inst = instance(&["..", ".."], &[((0, 0), (0, 0))]);
        assert_eq!(encode_fg2v(&inst).num_edges(), 4);
    }

    #[test]
    fn adjacency_lists_are_sorted() {
        let g =
            EncodedGraph::from_edges(5, [(4, 0), (2, 0), (1, 0), (3, 1), (4, 1), (2, 3)]).unwrap();
        let (offsets, nbrs) = g.adjacency();
        for u in 0..5 {
            let list = &nbrs[offsets[u]..offsets[u + 1]];
            assert!(list.windows(2).all(|w| w[0] < w[1]), "node {u}: {list:?}");
        }
        assert_eq!(&nbrs[offsets[0]..offsets[1]], &[1, 2, 4]);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert_eq!(
            EncodedGraph::from_edges(2, [(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
        assert!(EncodedGraph::from_edges(2, [(0, 2)]).is_err());
        let g = EncodedGraph::from_edges(3, [(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = EncodedGraph::from_edges(4, [(0, 1), (2, 3), (1, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "4\n0 1\n1 3\n2 3\n");
        assert_eq!(EncodedGraph::from_edge_list(&text).unwrap(), g);
        assert!(EncodedGraph::from_edge_list("3\n0 x\n").is_err());
    }
}
