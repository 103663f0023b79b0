//! Regression trees grown level by level with exact greedy split search over
//! presorted feature columns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A regression tree as nested split/leaf records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] < threshold` go left.
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] < *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<f64> {
        let mut out = Vec::new();
        fn walk(n: &TreeNode, out: &mut Vec<f64>) {
            match n {
                TreeNode::Leaf { value } => out.push(*value),
                TreeNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    pub(crate) fn remap_features(&mut self, map: &[usize]) {
        if let TreeNode::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            *feature = map[*feature];
            left.remap_features(map);
            right.remap_features(map);
        }
    }
}

/// Feature columns sorted once per training run.
pub(crate) struct SortedColumns {
    /// Features that are not constant over the training rows.
    pub features: Vec<usize>,
    /// For each entry of `features`: row indices ascending by value (ties by row).
    pub order: Vec<Vec<u32>>,
    /// Values aligned with `order`.
    pub values: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub fn new(rows: &[f64], num_rows: usize, num_features: usize) -> Self {
        let cols: Vec<(usize, Vec<u32>, Vec<f64>)> = (0..num_features)
            .into_par_iter()
            .filter_map(|f| {
                let mut order: Vec<u32> = (0..num_rows as u32).collect();
                let value = |i: u32| rows[i as usize * num_features + f];
                order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
                let values: Vec<f64> = order.iter().map(|&i| value(i)).collect();
                (values.first() != values.last()).then_some((f, order, values))
            })
            .collect();
        let mut out = Self {
            features: Vec::with_capacity(cols.len()),
            order: Vec::with_capacity(cols.len()),
            values: Vec::with_capacity(cols.len()),
        };
        for (f, o, v) in cols {
            out.features.push(f);
            out.order.push(o);
            out.values.push(v);
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    gain: f64,
    /// Position in `SortedColumns::features`.
    column: usize,
    threshold: f64,
}

enum Slot {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

const NO_NODE: u32 = u32::MAX;
// Splits must improve the objective by more than rounding noise.
const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Clone, Copy)]
struct RowInfo {
    slot: u32,
    g: f64,
    h: f64,
}

struct Scan {
    gl: f64,
    hl: f64,
    last: f64,
    g: f64,
    h: f64,
    best_num: f64,
    best_den: f64,
    threshold: f64,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t > lo {
        t
    } else {
        hi
    }
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Grows one tree on gradients `grad`/`hess` over the rows where
/// `in_sample` is set, considering only the columns flagged in `use_column`.
pub(crate) fn build_tree(
    rows: &[f64],
    num_features: usize,
    columns: &SortedColumns,
    use_column: &[bool],
    grad: &[f64],
    hess: &[f64],
    in_sample: &[bool],
    params: TreeParams,
) -> TreeNode {
    let n = grad.len();
    let lambda = params.l2_lambda;
    let leaf_value = |g: f64, h: f64| -params.learning_rate * g / (h + lambda);

    let mut node_of_row: Vec<u32> = in_sample
        .iter()
        .map(|&s| if s { 0 } else { NO_NODE })
        .collect();
    let (g0, h0) = (0..n)
        .filter(|&i| in_sample[i])
        .fold((0.0, 0.0), |(g, h), i| (g + grad[i], h + hess[i]));

    let mut compacted: Option<Vec<(Vec<u32>, Vec<f64>)>> = None;
    let mut work_len = n;
    let mut slots: Vec<Option<Slot>> = vec![None];
    // (node id, G, H)
    let mut open: Vec<(usize, f64, f64)> = vec![(0, g0, h0)];

    for _depth in 0..params.max_depth {
        // Nodes that cannot produce two children heavy enough become leaves now.
        let (splittable, done): (Vec<_>, Vec<_>) = open
            .into_iter()
            .partition(|&(_, _, h)| h >= 2.0 * params.min_child_weight && h > 0.0);
        for (id, g, h) in done {
            slots[id] = Some(Slot::Leaf(leaf_value(g, h)));
        }
        open = splittable;
        if open.is_empty() {
            break;
        }

        let mut slot_of_node = vec![u32::MAX; slots.len()];
        for (s, &(id, _, _)) in open.iter().enumerate() {
            slot_of_node[id] = s as u32;
        }
        let totals: Vec<(f64, f64)> = open.iter().map(|&(_, g, h)| (g, h)).collect();
        // Per row: open slot (or NO_NODE), gradient, hessian.
        let row_info: Vec<RowInfo> = (0..n)
            .map(|i| {
                let node = node_of_row[i];
                let slot = if node == NO_NODE {
                    NO_NODE
                } else {
                    slot_of_node[node as usize]
                };
                RowInfo {
                    slot,
                    g: grad[i],
                    h: hess[i],
                }
            })
            .collect();
        let mcw = params.min_child_weight;

        // Drop rows that left the search from the scanned columns once
        // enough of them have accumulated.
        let active = row_info.iter().filter(|r| r.slot != NO_NODE).count();
        if 2 * active <= work_len {
            let cols: Vec<(Vec<u32>, Vec<f64>)> = (0..columns.features.len())
                .into_par_iter()
                .map(|c| {
                    if !use_column[c] {
                        return (Vec::new(), Vec::new());
                    }
                    let (order, values) = match &compacted {
                        Some(cols) => (&cols[c].0, &cols[c].1),
                        None => (&columns.order[c], &columns.values[c]),
                    };
                    order
                        .iter()
                        .zip(values)
                        .filter(|(&row, _)| row_info[row as usize].slot != NO_NODE)
                        .map(|(&row, &x)| (row, x))
                        .unzip()
                })
                .collect();
            compacted = Some(cols);
            work_len = active;
        }
        let compacted_ref = &compacted;

        let scan = |c: usize| -> Vec<Option<Candidate>> {
            let k = open.len();
            if !use_column[c] {
                return vec![None; k];
            }
            let mut acc: Vec<Scan> = totals
                .iter()
                .map(|&(g, h)| Scan {
                    gl: 0.0,
                    hl: 0.0,
                    last: f64::NAN,
                    g,
                    h,
                    best_num: -1.0,
                    best_den: 1.0,
                    threshold: 0.0,
                })
                .collect();
            let (order, values) = match compacted_ref {
                Some(cols) => (&cols[c].0, &cols[c].1),
                None => (&columns.order[c], &columns.values[c]),
            };
            for (&row, &x) in order.iter().zip(values) {
                let info = row_info[row as usize];
                if info.slot == NO_NODE {
                    continue;
                }
                let a = &mut acc[info.slot as usize];
                // `last` is NaN before the first row, so this only fires
                // between two distinct values of the node.
                if x > a.last && a.hl >= mcw {
                    let (gr, hr) = (a.g - a.gl, a.h - a.hl);
                    if hr >= mcw {
                        // Child scores as one fraction, compared without dividing.
                        let (dl, dr) = (a.hl + lambda, hr + lambda);
                        let num = a.gl * a.gl * dr + gr * gr * dl;
                        let den = dl * dr;
                        if num * a.best_den > a.best_num * den {
                            a.best_num = num;
                            a.best_den = den;
                            a.threshold = midpoint(a.last, x);
                        }
                    }
                }
                a.gl += info.g;
                a.hl += info.h;
                a.last = x;
            }
            acc.iter()
                .map(|a| {
                    if a.best_num < 0.0 {
                        return None;
                    }
                    let gain = 0.5 * (a.best_num / a.best_den - score(a.g, a.h, lambda));
                    (gain > MIN_SPLIT_GAIN).then_some(Candidate {
                        gain,
                        column: c,
                        threshold: a.threshold,
                    })
                })
                .collect()
        };

        let per_column: Vec<Vec<Option<Candidate>>> = if work_len * columns.features.len() > 1 << 16
        {
            (0..columns.features.len())
                .into_par_iter()
                .map(scan)
                .collect()
        } else {
            (0..columns.features.len()).map(scan).collect()
        };

        // Reduce in column order so ties go to the lowest feature index.
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        for cands in &per_column {
            for (b, c) in best.iter_mut().zip(cands) {
                if let Some(c) = c {
                    if b.map_or(true, |cur| c.gain > cur.gain) {
                        *b = Some(*c);
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        // node id -> (column, threshold, left id, right id)
        let mut routing: Vec<Option<(usize, f64, u32, u32)>> = vec![None; slots.len()];
        for (s, &(id, g, h)) in open.iter().enumerate() {
            match best[s] {
                None => slots[id] = Some(Slot::Leaf(leaf_value(g, h))),
                Some(cand) => {
                    let left = slots.len();
                    let right = left + 1;
                    slots.push(None);
                    slots.push(None);
                    slots[id] = Some(Slot::Split {
                        feature: columns.features[cand.column],
                        threshold: cand.threshold,
                        gain: cand.gain,
                        left,
                        right,
                    });
                    routing[id] = Some((
                        columns.features[cand.column],
                        cand.threshold,
                        left as u32,
                        right as u32,
                    ));
                    next_open.push((left, 0.0, 0.0));
                    next_open.push((right, 0.0, 0.0));
                }
            }
        }
        if next_open.is_empty() {
            open = next_open;
            break;
        }

        let mut stats = vec![(0.0, 0.0); slots.len()];
        for i in 0..n {
            let node = node_of_row[i];
            if node == NO_NODE {
                continue;
            }
            match routing.get(node as usize).copied().flatten() {
                Some((feature, threshold, left, right)) => {
                    let child = if rows[i * num_features + feature] < threshold {
                        left
                    } else {
                        right
                    };
                    node_of_row[i] = child;
                    let st = &mut stats[child as usize];
                    st.0 += grad[i];
                    st.1 += hess[i];
                }
                // parent became a leaf; its rows leave the search
                None => node_of_row[i] = NO_NODE,
            }
        }
        open = next_open
            .into_iter()
            .map(|(id, _, _)| (id, stats[id].0, stats[id].1))
            .collect();
    }
    for (id, g, h) in open {
        slots[id] = Some(Slot::Leaf(leaf_value(g, h)));
    }

    fn assemble(slots: &[Option<Slot>], id: usize) -> TreeNode {
        match slots[id].as_ref().expect("every node is finalized") {
            Slot::Leaf(value) => TreeNode::Leaf { value: *value },
            Slot::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                gain: *gain,
                left: Box::new(assemble(slots, *left)),
                right: Box::new(assemble(slots, *right)),
            },
        }
    }
    assemble(&slots, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            l2_lambda: 0.0,
        }
    }

    #[test]
    fn single_split_on_step_target() {
        // squared-error style: g = -target, h = 1
        let rows = vec![0.0, 1.0, 2.0, 3.0];
        let grad = vec![1.0, 1.0, -1.0, -1.0];
        let hess = vec![1.0; 4];
        let cols = SortedColumns::new(&rows, 4, 1);
        let tree = build_tree(
            &rows,
            1,
            &cols,
            &[true],
            &grad,
            &hess,
            &[true; 4],
            params(3),
        );
        match &tree {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.predict(&[0.5]), -1.0);
        assert_eq!(tree.predict(&[2.5]), 1.0);
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let rows = vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0];
        let cols = SortedColumns::new(&rows, 3, 2);
        assert_eq!(cols.features, vec![1]);
        assert_eq!(cols.values[0], vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn depth_zero_is_a_leaf() {
        let rows = vec![0.0, 1.0];
        let cols = SortedColumns::new(&rows, 2, 1);
        let tree = build_tree(
            &rows,
            1,
            &cols,
            &[true],
            &[1.0, -3.0],
            &[1.0, 1.0],
            &[true, true],
            params(0),
        );
        assert_eq!(tree, TreeNode::Leaf { value: 1.0 });
    }

    #[test]
    fn unsampled_rows_are_ignored() {
        let rows = vec![0.0, 1.0, 2.0];
        let cols = SortedColumns::new(&rows, 3, 1);
        let tree = build_tree(
            &rows,
            1,
            &cols,
            &[true],
            &[1.0, 1.0, -50.0],
            &[1.0; 3],
            &[true, true, false],
            params(2),
        );
        assert_eq!(tree, TreeNode::Leaf { value: -1.0 });
    }

    #[test]
    fn ties_between_features_go_to_lowest_index() {
        // two identical columns
        let rows = vec![0.0, 0.0, 1.0, 1.0];
        let cols = SortedColumns::new(&rows, 2, 2);
        let tree = build_tree(
            &rows,
            2,
            &cols,
            &[true, true],
            &[1.0, -1.0],
            &[1.0, 1.0],
            &[true, true],
            params(1),
        );
        let mut features = Vec::new();
        tree.for_each_split(&mut |f, _| features.push(f));
        assert_eq!(features, vec![0]);
    }
}
