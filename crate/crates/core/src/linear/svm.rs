use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linear::{check_trainable, descend, GdConfig};
use crate::numeric::{argmax, check_dim, Matrix, Standardizer};

/// One-vs-rest linear SVM: row `k` of `weights` is the hyperplane separating
/// class `k` from the rest (coefficients, then bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Matrix,
    pub reg_c: f64,
    pub standardization: Standardizer,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.standardization.dim()
    }

    /// Signed margin `f_k(x)` of every class.
    pub fn margins(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features(), x)?;
        let d = x.len();
        let mut z = vec![0.0; d];
        self.standardization.transform_row(x, &mut z);
        Ok((0..self.weights.rows())
            .map(|k| {
                let w = self.weights.row(k);
                w[..d].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + w[d]
            })
            .collect())
    }
}

/// `max(0, 1 - y f(x))` for a sign label `y`.
pub fn hinge_loss(y: f64, fx: f64) -> Result<f64> {
    if y != 1.0 && y != -1.0 {
        return Err(Error::InvalidParameter(format!(
            "hinge label {y} is not -1 or +1"
        )));
    }
    if !fx.is_finite() {
        return Err(Error::NonFinite(format!("hinge score {fx}")));
    }
    Ok(if y * fx >= 1.0 { 0.0 } else { 1.0 - y * fx })
}

/// Mean hinge loss plus `reg_c / 2 * |w|^2` (bias unpenalised) for one binary
/// problem, with a subgradient. `params` is `[w_0 .. w_{d-1}, b]`.
pub fn svm_objective(params: &[f64], z: &Matrix, signs: &[f64], reg_c: f64) -> (f64, Vec<f64>) {
    let n = z.rows();
    let d = z.cols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for i in 0..n {
        let zi = z.row(i);
        let fx = params[..d].iter().zip(zi).map(|(a, b)| a * b).sum::<f64>() + params[d];
        let margin = signs[i] * fx;
        if margin < 1.0 {
            loss += 1.0 - margin;
            for j in 0..d {
                grad[j] -= signs[i] * zi[j];
            }
            grad[d] -= signs[i];
        }
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    for g in &mut grad {
        *g *= inv_n;
    }
    for j in 0..d {
        loss += 0.5 * reg_c * params[j] * params[j];
        grad[j] += reg_c * params[j];
    }
    (loss, grad)
}

/// Fit one binary hinge-loss problem per class (that class +1, the rest -1)
/// by subgradient descent on z-scored features. `cfg.l2` is `reg_c`.
pub fn fit_svm(dataset: &Dataset, cfg: &GdConfig) -> Result<SvmModel> {
    cfg.validate()?;
    if cfg.l2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("reg_c = {} must be > 0", cfg.l2)));
    }
    check_trainable(dataset)?;
    let k = dataset.n_classes();
    let d = dataset.n_features();
    let standardization = Standardizer::fit(&dataset.x);
    let z = standardization.transform(&dataset.x);
    let mut weights = Matrix::zeros(k, d + 1);
    for class in 0..k {
        let signs: Vec<f64> = dataset
            .y
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let (params, _) = descend(vec![0.0; d + 1], cfg.learning_rate, cfg.epochs, |p| {
            svm_objective(p, &z, &signs, cfg.l2)
        });
        weights.row_mut(class).copy_from_slice(&params);
    }
    Ok(SvmModel {
        weights,
        reg_c: cfg.l2,
        standardization,
    })
}

/// Class with the largest one-vs-rest margin (lowest index on ties).
pub fn predict_svm(model: &SvmModel, x: &[f64]) -> Result<usize> {
    Ok(argmax(&model.margins(x)?))
}
