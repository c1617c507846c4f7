//! Linear classifiers on z-scored features: multinomial logistic regression
//! and a one-vs-rest hinge-loss SVM, both trained by full-batch gradient
//! descent with step halving whenever a step would raise the objective.

mod logistic;
mod svm;

pub use logistic::{fit_logistic, fit_logistic_traced, logistic_objective, predict_logistic, LogisticModel};
pub use svm::{fit_svm, hinge_loss, predict_svm, svm_objective, SvmModel};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Gradient-descent settings shared by the iterative models.
///
/// For the SVM, `l2` is the regularization strength `reg_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl GdConfig {
    pub fn logistic_default() -> Self {
        GdConfig {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-3,
            seed: 0,
        }
    }

    pub fn svm_default() -> Self {
        GdConfig {
            learning_rate: 0.01,
            epochs: 500,
            l2: 1.0,
            seed: 0,
        }
    }

    pub fn mlp_default() -> Self {
        GdConfig {
            learning_rate: 0.05,
            epochs: 300,
            l2: 1e-4,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate = {} must be > 0",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidParameter(format!("l2 = {} must be >= 0", self.l2)));
        }
        Ok(())
    }
}

/// Non-empty with at least two classes present.
pub(crate) fn check_trainable(dataset: &Dataset) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.classes_present() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Minimise `objective` from `start` with gradient steps, halving the step
/// whenever it would increase the objective. Returns the final parameters
/// and the objective after each accepted or rejected epoch (non-increasing).
pub(crate) fn descend<F>(start: Vec<f64>, mut lr: f64, epochs: usize, objective: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut params = start;
    let (mut loss, mut grad) = objective(&params);
    let mut trace = vec![loss];
    let mut candidate = vec![0.0; params.len()];
    for _ in 0..epochs {
        if lr < 1e-12 {
            break;
        }
        for ((c, p), g) in candidate.iter_mut().zip(&params).zip(&grad) {
            *c = p - lr * g;
        }
        let (next_loss, next_grad) = objective(&candidate);
        if next_loss <= loss {
            std::mem::swap(&mut params, &mut candidate);
            loss = next_loss;
            grad = next_grad;
        } else {
            lr *= 0.5;
        }
        trace.push(loss);
    }
    (params, trace)
}
