//! Axis-aligned binary trees: a Gini CART classifier, multiclass gradient
//! boosting over variance-reduction regression trees, and split-gain feature
//! importance.

mod cart;
mod gbdt;
mod importance;

pub use cart::{fit_tree, predict_tree, TreeModel};
pub use gbdt::{fit_gbdt, predict_gbdt, GbdtModel, GbdtParams};
pub use importance::{feature_importance, ImportanceEntry, ImportanceReport};

use serde::{Deserialize, Serialize};

use crate::numeric::Matrix;

/// A node of a fitted tree. Internal nodes send `x[feature] <= threshold`
/// left. Leaves hold class counts (lone tree) or additive scores (boosting).
///
/// Serializes as `{"feature", "threshold", "left", "right"}` or `{"leaf": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf: Vec<f64>,
    },
}

impl TreeNode {
    pub fn leaf(values: Vec<f64>) -> Self {
        TreeNode::Leaf { leaf: values }
    }

    /// Leaf reached by `x`, with the number of internal nodes visited.
    pub fn route(&self, x: &[f64]) -> (&[f64], usize) {
        let mut node = self;
        let mut hops = 0;
        loop {
            match node {
                TreeNode::Leaf { leaf } => return (leaf, hops),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                    hops += 1;
                }
            }
        }
    }

    /// Depth of the deepest leaf; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { leaf } => out.push(leaf.as_slice()),
                TreeNode::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Per-feature sample orderings for one node. Each list holds the node's
/// sample indices sorted by that feature's value, ties by index.
pub(crate) struct NodeOrders {
    pub(crate) by_feature: Vec<Vec<usize>>,
}

impl NodeOrders {
    pub(crate) fn root(x: &Matrix) -> Self {
        let by_feature = (0..x.cols())
            .map(|j| {
                let mut idx: Vec<usize> = (0..x.rows()).collect();
                idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
                idx
            })
            .collect();
        NodeOrders { by_feature }
    }

    pub(crate) fn samples(&self) -> &[usize] {
        &self.by_feature[0]
    }

    pub(crate) fn len(&self) -> usize {
        self.by_feature[0].len()
    }

    /// Stable partition of every ordering by `goes_left`.
    pub(crate) fn split(self, goes_left: &[bool]) -> (NodeOrders, NodeOrders) {
        let mut left = Vec::with_capacity(self.by_feature.len());
        let mut right = Vec::with_capacity(self.by_feature.len());
        for order in self.by_feature {
            let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| goes_left[i]);
            left.push(l);
            right.push(r);
        }
        (NodeOrders { by_feature: left }, NodeOrders { by_feature: right })
    }
}

/// Threshold between two consecutive distinct values; falls back to the
/// lower value when the midpoint rounds up to the upper one.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}
