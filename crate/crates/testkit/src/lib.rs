//! Independent reference implementations and random generators for tests.
//!
//! Nothing here calls into the main crate. The oracles are written the slow,
//! obvious way (dense matrices, priority queues, brute force) so that
//! agreement with the optimized code means something.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::Rng;

/// A random grid: `(width, height, passable)` in row-major order.
pub fn random_grid(
    rng: &mut impl Rng,
    max_w: usize,
    max_h: usize,
    obstacle_p: f64,
) -> (usize, usize, Vec<bool>) {
    let w = rng.random_range(1..=max_w);
    let h = rng.random_range(1..=max_h);
    let passable = (0..w * h)
        .map(|_| rng.random::<f64>() >= obstacle_p)
        .collect();
    (w, h, passable)
}

/// The grid as `.map` file text.
pub fn map_text(w: usize, h: usize, passable: &[bool]) -> String {
    let mut out = format!("type octile\nheight {h}\nwidth {w}\nmap\n");
    for y in 0..h {
        for x in 0..w {
            out.push(if passable[y * w + x] { '.' } else { '@' });
        }
        out.push('\n');
    }
    out
}

/// Single-source distances on a 4-connected grid by Dijkstra with unit
/// weights. `None` marks blocked or unreachable cells.
pub fn dijkstra_grid(w: usize, h: usize, passable: &[bool], source: usize) -> Vec<Option<u64>> {
    let mut dist: Vec<Option<u64>> = vec![None; w * h];
    if !passable[source] {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].is_some_and(|best| best < d) {
            continue;
        }
        let (x, y) = (v % w, v / w);
        let mut next = Vec::new();
        if x > 0 {
            next.push(v - 1);
        }
        if x + 1 < w {
            next.push(v + 1);
        }
        if y > 0 {
            next.push(v - w);
        }
        if y + 1 < h {
            next.push(v + w);
        }
        for u in next {
            if passable[u] && dist[u].map_or(true, |du| d + 1 < du) {
                dist[u] = Some(d + 1);
                heap.push(Reverse((d + 1, u)));
            }
        }
    }
    dist
}

/// One shortest path from `s` to `t` as cell ids, by breadth-first search
/// expanding neighbours up, left, right, down and keeping the first parent.
pub fn bfs_path(w: usize, h: usize, passable: &[bool], s: usize, t: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; w * h];
    let mut seen = vec![false; w * h];
    let mut queue = std::collections::VecDeque::from([s]);
    seen[s] = true;
    while let Some(v) = queue.pop_front() {
        if v == t {
            break;
        }
        let (x, y) = (v % w, v / w);
        let candidates = [
            (y > 0).then(|| v - w),
            (x > 0).then(|| v - 1),
            (x + 1 < w).then(|| v + 1),
            (y + 1 < h).then(|| v + w),
        ];
        for u in candidates.into_iter().flatten() {
            if passable[u] && !seen[u] {
                seen[u] = true;
                parent[u] = v;
                queue.push_back(u);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = vec![t];
    while *path.last().unwrap() != s {
        path.push(parent[*path.last().unwrap()]);
    }
    path.reverse();
    Some(path)
}

/// Erdős–Rényi graph edges `(u, v)` with `u < v`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// A uniformly random permutation of `0..n`.
pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

pub fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in edges {
        if u != v {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
    }
    a
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Log-degree and clustering coefficient from the dense adjacency matrix.
pub fn dense_attributes(a: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = a.len();
    (0..n)
        .map(|v| {
            let deg: f64 = a[v].iter().sum();
            let mut tri = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    tri += a[v][i] * a[v][j] * a[i][j];
                }
            }
            let cc = if deg < 2.0 {
                0.0
            } else {
                tri / (deg * (deg - 1.0) / 2.0)
            };
            [(1.0 + deg).ln(), cc]
        })
        .collect()
}

/// Pooled characteristic-function embedding computed with explicit powers
/// of the dense walk matrix `D⁻¹A`.
///
/// Layout: attribute, then scale `1..=order`, then `θ_j = j·θmax/points`
/// for `j = 1..=points`, then (cos, sin).
pub fn dense_feather(
    n: usize,
    edges: &[(usize, usize)],
    order: usize,
    points: usize,
    theta_max: f64,
    max_pool: bool,
) -> Vec<f64> {
    let dim = 2 * order * points * 2;
    if n == 0 {
        return vec![0.0; dim];
    }
    let a = dense_adjacency(n, edges);
    let attrs = dense_attributes(&a);
    let walk: Vec<Vec<f64>> = a
        .iter()
        .map(|row| {
            let d: f64 = row.iter().sum();
            row.iter()
                .map(|&x| if d > 0.0 { x / d } else { 0.0 })
                .collect()
        })
        .collect();
    let mut powers = vec![walk.clone()];
    for _ in 1..order {
        let next = mat_mul(powers.last().unwrap(), &walk);
        powers.push(next);
    }
    let mut out = vec![0.0; dim];
    for attr in 0..2 {
        for (r, pr) in powers.iter().enumerate() {
            for j in 1..=points {
                let theta = j as f64 * theta_max / points as f64;
                for part in 0..2 {
                    let idx = ((attr * order + r) * points + (j - 1)) * 2 + part;
                    let node_values = (0..n).map(|u| {
                        (0..n)
                            .map(|v| {
                                let phase = theta * attrs[v][attr];
                                pr[u][v] * if part == 0 { phase.cos() } else { phase.sin() }
                            })
                            .sum::<f64>()
                    });
                    out[idx] = if max_pool {
                        node_values.fold(f64::NEG_INFINITY, f64::max)
                    } else {
                        node_values.sum::<f64>() / n as f64
                    };
                }
            }
        }
    }
    out
}

/// `-ln softmax(scores)[label]` by the textbook formula.
pub fn naive_log_loss(scores: &[f64], label: usize) -> f64 {
    let z: f64 = scores.iter().map(|s| s.exp()).sum();
    -(scores[label].exp() / z).ln()
}

/// Cells of a path given as (x, y) pairs, deduplicated and sorted by
/// row-major id.
pub fn cell_set(w: usize, cells: impl IntoIterator<Item = (usize, usize)>) -> BTreeSet<usize> {
    cells.into_iter().map(|(x, y)| y * w + x).collect()
}

/// Undirected 4-neighbour edges between cells of `set`, as `(a, b)` cell
/// pairs with `a < b`.
pub fn induced_grid_edges(w: usize, set: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &c in set {
        if c % w + 1 < w && set.contains(&(c + 1)) {
            out.insert((c, c + 1));
        }
        if set.contains(&(c + w)) {
            out.insert((c, c + w));
        }
    }
    out
}

/// `n` points in `classes` Gaussian-ish blobs in `dim` dimensions, centres
/// spaced 4 apart along the diagonal, uniform noise of half-width `spread`.
pub fn blobs(
    rng: &mut impl Rng,
    n: usize,
    classes: usize,
    dim: usize,
    spread: f64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        rows.push(
            (0..dim)
                .map(|_| 4.0 * c as f64 + rng.random_range(-spread..spread))
                .collect(),
        );
        labels.push(c);
    }
    (rows, labels)
}

/// Two informative features whose sign pattern is XOR'd into the label, plus
/// `noise_dims` uniform columns.
pub fn xor_data(rng: &mut impl Rng, n: usize, noise_dims: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let mut row = vec![a, b];
        row.extend((0..noise_dims).map(|_| rng.random_range(-1.0..1.0)));
        rows.push(row);
        labels.push(usize::from((a > 0.0) != (b > 0.0)));
    }
    (rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dijkstra_on_corridor() {
        let d = dijkstra_grid(4, 1, &[true, true, false, true], 0);
        assert_eq!(d, vec![Some(0), Some(1), None, None]);
    }

    #[test]
    fn triangle_attributes() {
        let a = dense_adjacency(3, &[(0, 1), (1, 2), (0, 2)]);
        for [ld, cc] in dense_attributes(&a) {
            assert!((ld - 3f64.ln()).abs() < 1e-15);
            assert_eq!(cc, 1.0);
        }
    }

    #[test]
    fn naive_log_loss_uniform() {
        assert!((naive_log_loss(&[0.0; 4], 2) - 4f64.ln()).abs() < 1e-15);
    }
}
