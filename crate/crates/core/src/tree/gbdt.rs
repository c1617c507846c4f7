use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{check_dim, log_sum_exp, softmax, softmax_in_place, Matrix, ProbVector};
use crate::tree::{midpoint, NodeOrders, TreeNode};

/// Smallest class prior used for the initial scores.
const MIN_PRIOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 200,
            shrinkage: 0.1,
            max_depth: 3,
            min_samples_leaf: 2,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be >= 1".into()));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrinkage = {} must lie in (0, 1]",
                self.shrinkage
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Softmax gradient-boosted trees: one regression tree per class per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_features: usize,
    pub init_scores: Vec<f64>,
    /// `trees[m][k]` is the class-`k` tree of round `m`.
    pub trees: Vec<Vec<TreeNode>>,
    /// Accumulated split gain per feature.
    pub importance_raw: Vec<f64>,
    /// Training log-loss before round 1 and after every round.
    pub train_loss: Vec<f64>,
}

impl GbdtModel {
    pub fn n_classes(&self) -> usize {
        self.init_scores.len()
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features, x)?;
        let mut s = self.init_scores.clone();
        for round in &self.trees {
            for (k, tree) in round.iter().enumerate() {
                s[k] += self.shrinkage * tree.route(x).0[0];
            }
        }
        Ok(s)
    }
}

/// Multiclass boosting on the softmax log-loss.
///
/// Scores start at the log class priors. Each round computes the residuals
/// `1{y = k} - p_k` once, then fits one variance-reduction regression tree
/// per class to them. Leaf values take the one-step Newton update
/// `(K - 1) / K * Σ r / Σ |r| (1 - |r|)` and every tree's output is scaled
/// by `shrinkage`. The gain of every split is added to its feature's raw
/// importance.
pub fn fit_gbdt(dataset: &Dataset, params: &GbdtParams) -> Result<GbdtModel> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len();
    let d = dataset.n_features();
    let k = dataset.n_classes();
    let init_scores: Vec<f64> = dataset
        .class_counts()
        .iter()
        .map(|&c| (c as f64 / n as f64).max(MIN_PRIOR).ln())
        .collect();

    let mut scores = Matrix::zeros(n, k);
    for i in 0..n {
        scores.row_mut(i).copy_from_slice(&init_scores);
    }
    let root = NodeOrders::root(&dataset.x);
    let mut importance_raw = vec![0.0; d];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut train_loss = vec![log_loss(&scores, &dataset.y)];
    let mut probs = Matrix::zeros(n, k);
    let mut residual = vec![0.0; n];
    let mut fitted = vec![0.0; n];

    for _ in 0..params.rounds {
        for i in 0..n {
            let p = probs.row_mut(i);
            p.copy_from_slice(scores.row(i));
            softmax_in_place(p);
        }
        let mut round = Vec::with_capacity(k);
        for class in 0..k {
            for i in 0..n {
                residual[i] = f64::from(u8::from(dataset.y[i] == class)) - probs.get(i, class);
            }
            let mut builder = RegressionBuilder {
                x: &dataset.x,
                residual: &residual,
                k,
                params,
                fitted: &mut fitted,
                importance: &mut importance_raw,
                goes_left: vec![false; n],
            };
            let tree = builder.build(clone_orders(&root), 0);
            round.push(tree);
            for i in 0..n {
                let s = scores.get(i, class) + params.shrinkage * fitted[i];
                scores.set(i, class, s);
            }
        }
        trees.push(round);
        train_loss.push(log_loss(&scores, &dataset.y));
    }

    Ok(GbdtModel {
        rounds: params.rounds,
        shrinkage: params.shrinkage,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        n_features: d,
        init_scores,
        trees,
        importance_raw,
        train_loss,
    })
}

/// `init + shrinkage * Σ trees`, softmaxed; label is the argmax.
pub fn predict_gbdt(model: &GbdtModel, x: &[f64]) -> Result<(usize, ProbVector)> {
    let p = softmax(&model.scores(x)?)?;
    Ok((p.argmax(), p))
}

fn log_loss(scores: &Matrix, y: &[usize]) -> f64 {
    let n = scores.rows();
    (0..n)
        .map(|i| {
            let s = scores.row(i);
            log_sum_exp(s) - s[y[i]]
        })
        .sum::<f64>()
        / n as f64
}

fn clone_orders(o: &NodeOrders) -> NodeOrders {
    NodeOrders {
        by_feature: o.by_feature.clone(),
    }
}

struct RegressionBuilder<'a> {
    x: &'a Matrix,
    residual: &'a [f64],
    k: usize,
    params: &'a GbdtParams,
    fitted: &'a mut [f64],
    importance: &'a mut [f64],
    goes_left: Vec<bool>,
}

impl RegressionBuilder<'_> {
    fn build(&mut self, orders: NodeOrders, depth: usize) -> TreeNode {
        let msl = self.params.min_samples_leaf;
        if depth < self.params.max_depth && orders.len() >= 2 * msl {
            if let Some((feature, threshold, gain)) = self.best_split(&orders) {
                self.importance[feature] += gain;
                for &i in orders.samples() {
                    self.goes_left[i] = self.x.get(i, feature) <= threshold;
                }
                let (l, r) = orders.split(&self.goes_left);
                return TreeNode::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(l, depth + 1)),
                    right: Box::new(self.build(r, depth + 1)),
                };
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &i in orders.samples() {
            let r = self.residual[i];
            num += r;
            den += r.abs() * (1.0 - r.abs());
        }
        let value = if den.abs() < 1e-150 {
            0.0
        } else {
            (self.k as f64 - 1.0) / self.k as f64 * num / den
        };
        for &i in orders.samples() {
            self.fitted[i] = value;
        }
        TreeNode::leaf(vec![value])
    }

    /// Best `(feature, threshold, gain)` with positive gain, where gain is the
    /// drop in the residual sum of squares.
    fn best_split(&self, orders: &NodeOrders) -> Option<(usize, f64, f64)> {
        let n = orders.len();
        let msl = self.params.min_samples_leaf;
        let total: f64 = orders.samples().iter().map(|&i| self.residual[i]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        for (feature, order) in orders.by_feature.iter().enumerate() {
            let mut left = 0.0;
            for p in 0..n - 1 {
                left += self.residual[order[p]];
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
                let right = total - left;
                let gain = left * left / nl as f64 + right * right / nr as f64 - parent;
                if gain > 0.0 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((feature, midpoint(lo, hi), gain));
                }
            }
        }
        best
    }
}
