use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{argmax, check_dim, Matrix};
use crate::tree::{midpoint, NodeOrders, TreeNode};

/// A CART classification tree; leaves hold training class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_features: usize,
}

impl TreeModel {
    /// `(feature, threshold)` of the root split, if the root splits.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root {
            TreeNode::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Class counts of the leaf reached by `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> Result<&[f64]> {
        check_dim(self.n_features, x)?;
        Ok(self.root.route(x).0)
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    // Σ cl²·nr + Σ cr²·nl over nl·nr; larger is purer.
    num: u128,
    den: u128,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Greedy Gini tree.
///
/// Candidate thresholds are midpoints between consecutive distinct values of
/// each feature. The split with the largest impurity decrease wins, ties
/// going to the lowest feature index and then the lowest threshold; split
/// quality is compared exactly in integer arithmetic, so the chosen tree does
/// not depend on floating-point rounding. A node becomes a leaf when it is
/// pure, at `max_depth`, or has no split leaving `min_samples_leaf` samples on
/// both sides.
pub fn fit_tree(dataset: &Dataset, max_depth: usize, min_samples_leaf: usize) -> Result<TreeModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if min_samples_leaf == 0 {
        return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
    }
    let mut builder = Builder {
        x: &dataset.x,
        y: &dataset.y,
        k: dataset.n_classes(),
        max_depth,
        min_samples_leaf,
        goes_left: vec![false; dataset.len()],
    };
    let root = builder.build(NodeOrders::root(&dataset.x), 0);
    Ok(TreeModel {
        root,
        max_depth,
        min_samples_leaf,
        n_features: dataset.n_features(),
    })
}

/// Majority class of the leaf reached by `x` (lowest index on ties).
pub fn predict_tree(model: &TreeModel, x: &[f64]) -> Result<usize> {
    Ok(argmax(model.leaf_counts(x)?))
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    k: usize,
    max_depth: usize,
    min_samples_leaf: usize,
    goes_left: Vec<bool>,
}

impl Builder<'_> {
    fn build(&mut self, orders: NodeOrders, depth: usize) -> TreeNode {
        let mut counts = vec![0u64; self.k];
        for &i in orders.samples() {
            counts[self.y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let leaf = || TreeNode::leaf(counts.iter().map(|&c| c as f64).collect());
        if pure || depth >= self.max_depth || orders.len() < 2 * self.min_samples_leaf {
            return leaf();
        }
        let Some(best) = self.best_split(&orders, &counts) else {
            return leaf();
        };
        for &i in orders.samples() {
            self.goes_left[i] = self.x.get(i, best.feature) <= best.threshold;
        }
        let (l, r) = orders.split(&self.goes_left);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.build(l, depth + 1)),
            right: Box::new(self.build(r, depth + 1)),
        }
    }

    fn best_split(&self, orders: &NodeOrders, total: &[u64]) -> Option<Candidate> {
        let n = orders.len();
        let msl = self.min_samples_leaf;
        let mut best: Option<Candidate> = None;
        let mut left = vec![0u64; self.k];
        for (feature, order) in orders.by_feature.iter().enumerate() {
            left.iter_mut().for_each(|c| *c = 0);
            for p in 0..n - 1 {
                left[self.y[order[p]]] += 1;
                let nl = p + 1;
                let nr = n - nl;
                if nl < msl || nr < msl {
                    continue;
                }
                let lo = self.x.get(order[p], feature);
                let hi = self.x.get(order[p + 1], feature);
                if lo >= hi {
                    continue;
                }
                let (mut sl, mut sr) = (0u128, 0u128);
                for c in 0..self.k {
                    let a = u128::from(left[c]);
                    let b = u128::from(total[c] - left[c]);
                    sl += a * a;
                    sr += b * b;
                }
                let (nl, nr) = (nl as u128, nr as u128);
                let cand = Candidate {
                    feature,
                    threshold: midpoint(lo, hi),
                    num: sl * nr + sr * nl,
                    den: nl * nr,
                };
                if best.as_ref().is_none_or(|b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
        }
        best
    }
}
