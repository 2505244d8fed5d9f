//! Regression trees grown level by level with exact greedy split search.
//!
//! Split gain and leaf weights use first and second order gradient sums:
//! `gain = GL²/(HL+λ) + GR²/(HR+λ) − G²/(H+λ)` and `leaf = −G/(H+λ)`.
//! Candidates are midpoints between consecutive distinct values of a feature
//! within a node; implicit zeros of the sparse input take part as one value
//! group. Ties go to the lower feature index, then the lower threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Array-encoded binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn constant(value: f64) -> DecisionTree {
        DecisionTree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: &SparseVector) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(feature) <= threshold { left } else { right },
            }
        }
    }

    /// Structural checks: children in range and acyclic (each node reached once), finite leaves.
    pub fn is_well_formed(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || seen[i] {
                return false;
            }
            seen[i] = true;
            match self.nodes[i] {
                TreeNode::Leaf { value } if !value.is_finite() => return false,
                TreeNode::Leaf { .. } => {}
                TreeNode::Split { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
}

/// Nonzero entries of every feature, sorted by `(value, row)`.
pub struct FeatureColumns {
    columns: Vec<Vec<(f64, u32)>>,
}

impl FeatureColumns {
    pub fn new(rows: &[SparseVector], dim: usize) -> FeatureColumns {
        let mut columns: Vec<Vec<(f64, u32)>> = vec![Vec::new(); dim];
        for (r, row) in rows.iter().enumerate() {
            for (f, v) in row.iter() {
                columns[f].push((v, r as u32));
            }
        }
        for col in &mut columns {
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        FeatureColumns { columns }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64, n: usize) {
        self.g += g;
        self.h += h;
        self.n += n;
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

struct Scratch {
    nonzero: Vec<Stats>,
    left: Vec<Stats>,
    last: Vec<Option<f64>>,
    best: Vec<Option<Candidate>>,
    touched: Vec<usize>,
    seen: Vec<bool>,
}

impl Scratch {
    fn new(slots: usize) -> Scratch {
        Scratch {
            nonzero: vec![Stats::default(); slots],
            left: vec![Stats::default(); slots],
            last: vec![None; slots],
            best: vec![None; slots],
            touched: Vec::new(),
            seen: vec![false; slots],
        }
    }

    fn reset(&mut self) {
        for &s in &self.touched {
            self.nonzero[s] = Stats::default();
            self.left[s] = Stats::default();
            self.last[s] = None;
            self.best[s] = None;
            self.seen[s] = false;
        }
        self.touched.clear();
    }
}

struct Level<'a> {
    slot_of_row: &'a [i32],
    totals: &'a [Stats],
    grad: &'a [f64],
    hess: &'a [f64],
    params: TreeParams,
}

impl Level<'_> {
    fn consider(&self, scratch: &mut Scratch, slot: usize, value: f64, add: Stats) {
        if let Some(last) = scratch.last[slot] {
            if value > last {
                let left = scratch.left[slot];
                let total = self.totals[slot];
                let (hl, hr) = (left.h, total.h - left.h);
                let p = self.params;
                if hl >= p.min_child_weight && hr >= p.min_child_weight {
                    let gr = total.g - left.g;
                    let gain = left.g * left.g / (hl + p.lambda) + gr * gr / (hr + p.lambda)
                        - total.g * total.g / (total.h + p.lambda);
                    let better = match scratch.best[slot] {
                        None => true,
                        Some(b) => gain > b.gain,
                    };
                    if better && gain.is_finite() {
                        scratch.best[slot] = Some(Candidate {
                            gain,
                            threshold: 0.5 * (last + value),
                        });
                    }
                }
            }
        }
        scratch.left[slot].add(add.g, add.h, add.n);
        scratch.last[slot] = Some(value);
    }

    /// Best split of `column` for every active node it touches.
    fn scan(&self, column: &[(f64, u32)], scratch: &mut Scratch) -> Vec<(usize, Candidate)> {
        scratch.reset();
        for &(_, r) in column {
            let slot = self.slot_of_row[r as usize];
            if slot < 0 {
                continue;
            }
            let slot = slot as usize;
            if !scratch.seen[slot] {
                scratch.seen[slot] = true;
                scratch.touched.push(slot);
            }
            scratch.nonzero[slot].add(self.grad[r as usize], self.hess[r as usize], 1);
        }
        if scratch.touched.is_empty() {
            return Vec::new();
        }
        scratch.touched.sort_unstable();

        let mut zeros_done = false;
        for &(v, r) in column {
            let slot = self.slot_of_row[r as usize];
            if slot < 0 {
                continue;
            }
            if !zeros_done && v > 0.0 {
                self.inject_zeros(scratch);
                zeros_done = true;
            }
            let r = r as usize;
            self.consider(
                scratch,
                slot as usize,
                v,
                Stats {
                    g: self.grad[r],
                    h: self.hess[r],
                    n: 1,
                },
            );
        }
        if !zeros_done {
            self.inject_zeros(scratch);
        }
        scratch
            .touched
            .iter()
            .filter_map(|&s| scratch.best[s].map(|c| (s, c)))
            .collect()
    }

    fn inject_zeros(&self, scratch: &mut Scratch) {
        for k in 0..scratch.touched.len() {
            let slot = scratch.touched[k];
            let total = self.totals[slot];
            let nz = scratch.nonzero[slot];
            if total.n > nz.n {
                let zero = Stats {
                    g: total.g - nz.g,
                    h: total.h - nz.h,
                    n: total.n - nz.n,
                };
                self.consider(scratch, slot, 0.0, zero);
            }
        }
    }
}

/// Grows one tree on gradient `grad` and hessian `hess`. Returns the tree and
/// the leaf value reached by every training row.
pub fn grow_tree(
    rows: &[SparseVector],
    columns: &FeatureColumns,
    grad: &[f64],
    hess: &[f64],
    params: TreeParams,
) -> (DecisionTree, Vec<f64>) {
    let n = rows.len();
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let mut node_of_row: Vec<usize> = vec![0; n];
    let mut active: Vec<usize> = vec![0];
    let mut stats_of: Vec<Stats> = vec![Stats::default()];
    for r in 0..n {
        stats_of[0].add(grad[r], hess[r], 1);
    }

    for _depth in 0..params.max_depth {
        if active.is_empty() {
            break;
        }
        let mut slot_of_node = vec![-1i32; nodes.len()];
        for (s, &node) in active.iter().enumerate() {
            slot_of_node[node] = s as i32;
        }
        let slot_of_row: Vec<i32> = node_of_row.iter().map(|&nd| slot_of_node[nd]).collect();
        let totals: Vec<Stats> = active.iter().map(|&nd| stats_of[nd]).collect();
        let level = Level {
            slot_of_row: &slot_of_row,
            totals: &totals,
            grad,
            hess,
            params,
        };

        let per_feature: Vec<Vec<(usize, Candidate)>> = columns
            .columns
            .par_iter()
            .map_init(|| Scratch::new(active.len()), |scratch, col| level.scan(col, scratch))
            .collect();

        let mut best: Vec<Option<(usize, Candidate)>> = vec![None; active.len()];
        for (feature, cands) in per_feature.iter().enumerate() {
            for &(slot, c) in cands {
                let replace = match best[slot] {
                    None => true,
                    Some((_, b)) => c.gain > b.gain,
                };
                if replace {
                    best[slot] = Some((feature, c));
                }
            }
        }

        let mut next_active = Vec::new();
        let mut split_of_node: Vec<Option<(usize, f64, usize, usize)>> = vec![None; nodes.len()];
        for (slot, &node) in active.iter().enumerate() {
            let Some((feature, cand)) = best[slot] else { continue };
            if cand.gain <= 0.0 {
                continue;
            }
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes.push(TreeNode::Leaf { value: 0.0 });
            stats_of.push(Stats::default());
            stats_of.push(Stats::default());
            nodes[node] = TreeNode::Split {
                feature,
                threshold: cand.threshold,
                left,
                right,
            };
            split_of_node[node] = Some((feature, cand.threshold, left, right));
            next_active.push(left);
            next_active.push(right);
        }
        if next_active.is_empty() {
            break;
        }
        for r in 0..n {
            if let Some((feature, threshold, left, right)) = split_of_node[node_of_row[r]] {
                let child = if rows[r].get(feature) <= threshold { left } else { right };
                node_of_row[r] = child;
                stats_of[child].add(grad[r], hess[r], 1);
            }
        }
        active = next_active;
    }

    let mut leaf_values = vec![0.0; nodes.len()];
    for (i, node) in nodes.iter_mut().enumerate() {
        if let TreeNode::Leaf { value } = node {
            let s = stats_of[i];
            *value = -s.g / (s.h + params.lambda);
            leaf_values[i] = *value;
        }
    }
    let per_row = node_of_row.iter().map(|&nd| leaf_values[nd]).collect();
    (DecisionTree { nodes }, per_row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[&[f64]]) -> Vec<SparseVector> {
        values.iter().map(|v| SparseVector::from_dense(v)).collect()
    }

    const PARAMS: TreeParams = TreeParams {
        max_depth: 3,
        min_child_weight: 0.0,
        lambda: 1.0,
    };

    #[test]
    fn single_split_on_sign_change() {
        let x = rows(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let cols = FeatureColumns::new(&x, 1);
        let g = [1.0, 1.0, -1.0, -1.0];
        let h = [1.0; 4];
        let (tree, per_row) = grow_tree(&x, &cols, &g, &h, TreeParams { max_depth: 1, ..PARAMS });
        match tree.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            _ => panic!("expected a split"),
        }
        // leaf = -G/(H+1) = -2/3 and 2/3
        assert!((per_row[0] + 2.0 / 3.0).abs() < 1e-12);
        assert!((per_row[3] - 2.0 / 3.0).abs() < 1e-12);
        for (r, row) in x.iter().enumerate() {
            assert_eq!(tree.predict(row), per_row[r]);
        }
        assert!(tree.is_well_formed());
    }

    #[test]
    fn negative_values_and_implicit_zeros() {
        let x = rows(&[&[-2.0], &[-1.0], &[0.0], &[0.0], &[5.0]]);
        let cols = FeatureColumns::new(&x, 1);
        let g = [-1.0, -1.0, 1.0, 1.0, 1.0];
        let h = [1.0; 5];
        let (tree, _) = grow_tree(&x, &cols, &g, &h, TreeParams { max_depth: 1, ..PARAMS });
        match tree.nodes()[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(threshold, -0.5),
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn lowest_feature_wins_ties() {
        // identical columns 0 and 1
        let x = rows(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let cols = FeatureColumns::new(&x, 2);
        let (tree, _) = grow_tree(&x, &cols, &[1.0, -1.0], &[1.0, 1.0], PARAMS);
        assert!(matches!(tree.nodes()[0], TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn min_child_weight_blocks_split() {
        let x = rows(&[&[0.0], &[1.0]]);
        let cols = FeatureColumns::new(&x, 1);
        let params = TreeParams {
            min_child_weight: 2.0,
            ..PARAMS
        };
        let (tree, _) = grow_tree(&x, &cols, &[1.0, -1.0], &[1.0, 1.0], params);
        assert_eq!(tree.nodes().len(), 1);
    }

    #[test]
    fn depth_limit() {
        let x: Vec<SparseVector> = (0..32).map(|i| SparseVector::from_dense(&[i as f64])).collect();
        let cols = FeatureColumns::new(&x, 1);
        let g: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (tree, _) = grow_tree(&x, &cols, &g, &[1.0; 32], TreeParams { max_depth: 2, ..PARAMS });
        assert!(tree.depth() <= 2);
        assert!(tree.is_well_formed());
    }
}
