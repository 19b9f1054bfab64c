use serde::{Deserialize, Serialize};

use super::stump::{train_stump_on, Stump};
use crate::data::{FeatureBins, QuantizedDataset};
use crate::error::{Error, Result};
use crate::par::Parallelism;

/// Internal node of a complete binary tree. `Pass` marks a node below an
/// early leaf: it always routes left, and every leaf under it carries the
/// early leaf's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeNode {
    Split(Stump),
    Pass,
}

/// Complete binary tree of stumps with `2^depth - 1` internal nodes in
/// level order and `2^depth` leaves in {-1, +1}. At node `i` an input goes
/// to child `2i + 2` when the node's stump predicts `+1`, otherwise `2i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    depth: u32,
    nodes: Vec<TreeNode>,
    leaves: Vec<i8>,
}

impl DecisionTree {
    pub fn from_parts(depth: u32, nodes: Vec<TreeNode>, leaves: Vec<i8>) -> Result<Self> {
        if depth == 0 || depth > 20 {
            return Err(Error::format(format!("tree depth {depth} outside 1..=20")));
        }
        let width = 1usize << depth;
        if nodes.len() != width - 1 || leaves.len() != width {
            return Err(Error::format("tree node or leaf count does not match its depth"));
        }
        if leaves.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::format("leaf values must be ±1"));
        }
        if nodes.iter().any(|n| matches!(n, TreeNode::Split(s) if s.polarity != 1 && s.polarity != -1)) {
            return Err(Error::format("stump polarity must be ±1"));
        }
        Ok(DecisionTree { depth, nodes, leaves })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[i8] {
        &self.leaves
    }

    /// Stumps that actually split, in level order.
    pub fn splits(&self) -> impl Iterator<Item = &Stump> {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Split(s) => Some(s),
            TreeNode::Pass => None,
        })
    }

    #[inline]
    pub fn leaf_index<B: FeatureBins + ?Sized>(&self, x: &B) -> usize {
        let mut i = 0;
        while i < self.nodes.len() {
            let right = match &self.nodes[i] {
                TreeNode::Split(s) => s.predict(x) > 0,
                TreeNode::Pass => false,
            };
            i = 2 * i + if right { 2 } else { 1 };
        }
        i - self.nodes.len()
    }

    #[inline]
    pub fn predict<B: FeatureBins + ?Sized>(&self, x: &B) -> i8 {
        self.leaves[self.leaf_index(x)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub depth: u32,
    /// Nodes with fewer examples than this become leaves.
    pub min_node: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { depth: 4, min_node: 1 }
    }
}

fn majority(examples: &[u32], weights: &[f64], targets: &[i8]) -> i8 {
    let s: f64 = examples.iter().map(|&i| weights[i as usize] * targets[i as usize] as f64).sum();
    if s >= 0.0 {
        1
    } else {
        -1
    }
}

/// Greedy top-down tree: each node's stump is trained on the examples
/// routed to it. Leaves take the sign of their weighted target sum.
pub fn train_tree(
    data: &QuantizedDataset,
    weights: &[f64],
    targets: &[i8],
    params: TreeParams,
    candidate_dims: &[usize],
    mode: Parallelism,
) -> Result<DecisionTree> {
    super::stump::check_targets(targets, data.n())?;
    if params.depth == 0 || params.depth > 20 {
        return Err(Error::contract(format!("tree depth {} outside 1..=20", params.depth)));
    }
    if weights.len() != data.n() {
        return Err(Error::contract("one weight per example required"));
    }
    let all: Vec<u32> = (0..data.n() as u32).collect();
    train_tree_on(data, weights, targets, params, candidate_dims, &all, mode)
}

pub(crate) fn train_tree_on(
    data: &QuantizedDataset,
    weights: &[f64],
    targets: &[i8],
    params: TreeParams,
    candidate_dims: &[usize],
    examples: &[u32],
    mode: Parallelism,
) -> Result<DecisionTree> {
    let depth = params.depth;
    let internal = (1usize << depth) - 1;
    let mut nodes = vec![TreeNode::Pass; internal];
    let mut leaves = vec![1i8; internal + 1];
    let min_node = params.min_node.max(1);

    // Frontier of (node index, examples at node), handled level by level.
    let mut frontier: Vec<(usize, Vec<u32>)> = vec![(0, examples.to_vec())];
    for _level in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (node, ex) in frontier {
            let weight: f64 = ex.iter().map(|&i| weights[i as usize]).sum();
            if ex.len() < min_node || weight <= 0.0 {
                fill_leaf(node, internal, majority(&ex, weights, targets), &mut leaves);
                continue;
            }
            let fit = train_stump_on(data, weights, targets, candidate_dims, &ex, mode)?;
            let s = fit.stump;
            nodes[node] = TreeNode::Split(s);
            let column = data.column(s.feature as usize);
            let (right, left): (Vec<u32>, Vec<u32>) =
                ex.iter().partition(|&&i| s.predict_bin(column[i as usize]) > 0);
            next.push((2 * node + 1, left));
            next.push((2 * node + 2, right));
        }
        frontier = next;
    }
    for (node, ex) in frontier {
        leaves[node - internal] = majority(&ex, weights, targets);
    }
    Ok(DecisionTree { depth, nodes, leaves })
}

/// Sets every leaf below `node` to `value`.
fn fill_leaf(node: usize, internal: usize, value: i8, leaves: &mut [i8]) {
    let (mut lo, mut hi) = (node, node);
    while lo < internal {
        lo = 2 * lo + 1;
        hi = 2 * hi + 2;
    }
    for l in &mut leaves[lo - internal..=hi - internal] {
        *l = value;
    }
}
