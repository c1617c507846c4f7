use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::linear::{check_trainable, descend, GdConfig};
use crate::numeric::{check_dim, log_sum_exp, softmax, Matrix, ProbVector, Standardizer};

/// Multinomial logistic regression. Row `k` of `weights` holds the
/// coefficients of class `k` followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Matrix,
    pub standardization: Standardizer,
}

impl LogisticModel {
    pub fn n_classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_features(&self) -> usize {
        self.standardization.dim()
    }

    /// Per-class linear scores for a raw feature vector.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features(), x)?;
        let mut z = vec![0.0; x.len()];
        self.standardization.transform_row(x, &mut z);
        Ok(linear_scores(&self.weights, &z))
    }
}

fn linear_scores(w: &Matrix, z: &[f64]) -> Vec<f64> {
    let d = z.len();
    (0..w.rows())
        .map(|k| {
            let row = w.row(k);
            row[..d].iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + row[d]
        })
        .collect()
}

/// Mean cross-entropy plus `l2 / 2` times the squared non-bias weights,
/// and its gradient. `params` is the row-major `k x (d + 1)` weight matrix;
/// `z` is already standardized.
pub fn logistic_objective(params: &[f64], z: &Matrix, y: &[usize], k: usize, l2: f64) -> (f64, Vec<f64>) {
    let n = z.rows();
    let d = z.cols();
    let w = Matrix::from_vec(k, d + 1, params.to_vec()).expect("parameter length matches k x (d + 1)");
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for i in 0..n {
        let zi = z.row(i);
        let s = linear_scores(&w, zi);
        let lse = log_sum_exp(&s);
        loss += lse - s[y[i]];
        for c in 0..k {
            let resid = (s[c] - lse).exp() - f64::from(u8::from(c == y[i]));
            let g = &mut grad[c * (d + 1)..(c + 1) * (d + 1)];
            for j in 0..d {
                g[j] += resid * zi[j];
            }
            g[d] += resid;
        }
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    for g in &mut grad {
        *g *= inv_n;
    }
    for c in 0..k {
        for j in 0..d {
            let idx = c * (d + 1) + j;
            loss += 0.5 * l2 * params[idx] * params[idx];
            grad[idx] += l2 * params[idx];
        }
    }
    (loss, grad)
}

/// Full-batch gradient descent on the regularized multinomial cross-entropy.
pub fn fit_logistic(dataset: &Dataset, cfg: &GdConfig) -> Result<LogisticModel> {
    fit_logistic_traced(dataset, cfg).map(|(m, _)| m)
}

/// As [`fit_logistic`], also returning the objective after every epoch.
pub fn fit_logistic_traced(dataset: &Dataset, cfg: &GdConfig) -> Result<(LogisticModel, Vec<f64>)> {
    cfg.validate()?;
    check_trainable(dataset)?;
    let k = dataset.n_classes();
    let d = dataset.n_features();
    let standardization = Standardizer::fit(&dataset.x);
    let z = standardization.transform(&dataset.x);
    let (params, trace) = descend(vec![0.0; k * (d + 1)], cfg.learning_rate, cfg.epochs, |p| {
        logistic_objective(p, &z, &dataset.y, k, cfg.l2)
    });
    let weights = Matrix::from_vec(k, d + 1, params)?;
    Ok((
        LogisticModel {
            weights,
            standardization,
        },
        trace,
    ))
}

/// Class probabilities are the softmax of the class scores. With two classes
/// the label is 1 exactly when `p[1] >= 0.5`; otherwise it is the argmax
/// (lowest index on ties).
pub fn predict_logistic(model: &LogisticModel, x: &[f64]) -> Result<(usize, ProbVector)> {
    let p = softmax(&model.scores(x)?)?;
    let label = if p.len() == 2 {
        usize::from(p.get(1) >= 0.5)
    } else {
        p.argmax()
    };
    Ok((label, p))
}
