//! One-hidden-layer perceptron: tanh hidden units, softmax output,
//! cross-entropy loss, trained by mini-batch backpropagation.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linear::GdConfig;
use crate::numeric::{check_dim, log_sum_exp, softmax, Matrix, ProbVector, SeededRng, Standardizer};

pub const DEFAULT_HIDDEN: usize = 16;
pub const BATCH_SIZE: usize = 32;

/// Objective improvement over `PLATEAU_EPOCHS` below which training stops.
const PLATEAU_TOL: f64 = 1e-7;
const PLATEAU_EPOCHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

/// `w1` is `hidden x (d + 1)` and `w2` is `k x (hidden + 1)`; the last column
/// of each is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub w1: Matrix,
    pub w2: Matrix,
    pub activation: Activation,
    pub standardization: Standardizer,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    d: usize,
    h: usize,
    k: usize,
}

impl Shape {
    fn w1_len(&self) -> usize {
        self.h * (self.d + 1)
    }

    fn len(&self) -> usize {
        self.w1_len() + self.k * (self.h + 1)
    }
}

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.standardization.dim()
    }

    /// Output-layer scores (before softmax) for a raw feature vector.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_features(), x)?;
        let mut z = vec![0.0; x.len()];
        self.standardization.transform_row(x, &mut z);
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.w2.rows()];
        forward(
            self.w1.as_slice(),
            self.w2.as_slice(),
            self.shape(),
            &z,
            &mut hidden,
            &mut out,
        );
        Ok(out)
    }

    fn shape(&self) -> Shape {
        Shape {
            d: self.n_features(),
            h: self.hidden,
            k: self.w2.rows(),
        }
    }

    /// Weights flattened as `w1` then `w2`, row-major.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.w1.as_slice().to_vec();
        p.extend_from_slice(self.w2.as_slice());
        p
    }
}

fn forward(w1: &[f64], w2: &[f64], s: Shape, z: &[f64], hidden: &mut [f64], out: &mut [f64]) {
    for (u, a) in hidden.iter_mut().enumerate() {
        let row = &w1[u * (s.d + 1)..(u + 1) * (s.d + 1)];
        let pre = row[..s.d].iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + row[s.d];
        *a = pre.tanh();
    }
    for (c, o) in out.iter_mut().enumerate() {
        let row = &w2[c * (s.h + 1)..(c + 1) * (s.h + 1)];
        *o = row[..s.h]
            .iter()
            .zip(hidden.iter())
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + row[s.h];
    }
}

/// Mean cross-entropy over `rows` plus `l2 / 2` times the squared non-bias
/// weights, with its backpropagated gradient. `params` is `w1` then `w2`.
pub fn mlp_objective(
    params: &[f64],
    z: &Matrix,
    y: &[usize],
    hidden: usize,
    k: usize,
    l2: f64,
    rows: &[usize],
) -> (f64, Vec<f64>) {
    let s = Shape {
        d: z.cols(),
        h: hidden,
        k,
    };
    let (w1, w2) = params.split_at(s.w1_len());
    let mut grad = vec![0.0; s.len()];
    let (g1, g2) = grad.split_at_mut(s.w1_len());
    let mut a = vec![0.0; s.h];
    let mut out = vec![0.0; k];
    let mut delta_h = vec![0.0; s.h];
    let mut loss = 0.0;
    for &i in rows {
        let zi = z.row(i);
        forward(w1, w2, s, zi, &mut a, &mut out);
        let lse = log_sum_exp(&out);
        loss += lse - out[y[i]];
        delta_h.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..k {
            let delta = (out[c] - lse).exp() - f64::from(u8::from(c == y[i]));
            let row = &mut g2[c * (s.h + 1)..(c + 1) * (s.h + 1)];
            let wrow = &w2[c * (s.h + 1)..(c + 1) * (s.h + 1)];
            for u in 0..s.h {
                row[u] += delta * a[u];
                delta_h[u] += delta * wrow[u];
            }
            row[s.h] += delta;
        }
        for u in 0..s.h {
            let back = delta_h[u] * (1.0 - a[u] * a[u]);
            let row = &mut g1[u * (s.d + 1)..(u + 1) * (s.d + 1)];
            for j in 0..s.d {
                row[j] += back * zi[j];
            }
            row[s.d] += back;
        }
    }
    let inv = 1.0 / rows.len().max(1) as f64;
    loss *= inv;
    grad.iter_mut().for_each(|g| *g *= inv);
    for (idx, &w) in params.iter().enumerate() {
        let is_bias = if idx < s.w1_len() {
            idx % (s.d + 1) == s.d
        } else {
            (idx - s.w1_len()) % (s.h + 1) == s.h
        };
        if !is_bias {
            loss += 0.5 * l2 * w * w;
            grad[idx] += l2 * w;
        }
    }
    (loss, grad)
}

/// See [`fit_mlp_traced`].
pub fn fit_mlp(dataset: &Dataset, hidden: usize, cfg: &GdConfig) -> Result<MlpModel> {
    fit_mlp_traced(dataset, hidden, cfg).map(|(m, _)| m)
}

/// Mini-batch gradient descent (batches of [`BATCH_SIZE`], reshuffled every
/// epoch from the seeded generator) on z-scored features.
///
/// Every weight, bias column included, starts uniform in `±1/sqrt(fan_in)`
/// with the bias counted in the fan-in. After each epoch the full training
/// objective is evaluated; if the mini-batch pass raised it, the epoch is undone, the learning rate halved, and a
/// backtracking full-batch step is taken instead, so the returned per-epoch
/// trace never increases. Training stops after `cfg.epochs` or once the
/// objective improves by less than 1e-7 over 10 epochs.
pub fn fit_mlp_traced(dataset: &Dataset, hidden: usize, cfg: &GdConfig) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    if hidden == 0 {
        return Err(Error::InvalidParameter("hidden width must be >= 1".into()));
    }
    crate::linear::check_trainable(dataset)?;
    let s = Shape {
        d: dataset.n_features(),
        h: hidden,
        k: dataset.n_classes(),
    };
    let standardization = Standardizer::fit(&dataset.x);
    let z = standardization.transform(&dataset.x);
    let y = &dataset.y;
    let n = dataset.len();

    let mut rng = SeededRng::new(cfg.seed);
    let scale1 = 1.0 / ((s.d + 1) as f64).sqrt();
    let scale2 = 1.0 / ((s.h + 1) as f64).sqrt();
    let params_len = s.len();
    let mut params = Vec::with_capacity(params_len);
    for idx in 0..params_len {
        let scale = if idx < s.w1_len() { scale1 } else { scale2 };
        params.push(rng.uniform(-scale, scale));
    }

    let all: Vec<usize> = (0..n).collect();
    let full = |p: &[f64]| mlp_objective(p, &z, y, s.h, s.k, cfg.l2, &all);
    let mut lr = cfg.learning_rate;
    let mut loss = full(&params).0;
    let mut trace = vec![loss];
    let mut order = all.clone();
    for _ in 0..cfg.epochs {
        let snapshot = params.clone();
        rng.shuffle(&mut order);
        for batch in order.chunks(BATCH_SIZE) {
            let (_, g) = mlp_objective(&params, &z, y, s.h, s.k, cfg.l2, batch);
            params.iter_mut().zip(&g).for_each(|(p, g)| *p -= lr * g);
        }
        let mut next = full(&params).0;
        if !(next <= loss) {
            params = snapshot;
            lr *= 0.5;
            let (_, g) = full(&params);
            let mut step = lr;
            next = loss;
            for _ in 0..30 {
                let trial: Vec<f64> = params.iter().zip(&g).map(|(p, g)| p - step * g).collect();
                let l = full(&trial).0;
                if l <= loss {
                    params = trial;
                    next = l;
                    break;
                }
                step *= 0.5;
            }
        }
        loss = next;
        trace.push(loss);
        let t = trace.len();
        if t > PLATEAU_EPOCHS && trace[t - 1 - PLATEAU_EPOCHS] - loss < PLATEAU_TOL {
            break;
        }
    }

    let (w1, w2) = params.split_at(s.w1_len());
    Ok((
        MlpModel {
            w1: Matrix::from_vec(s.h, s.d + 1, w1.to_vec())?,
            w2: Matrix::from_vec(s.k, s.h + 1, w2.to_vec())?,
            activation: Activation::Tanh,
            standardization,
            hidden,
        },
        trace,
    ))
}

/// Forward pass; probabilities are the softmax of the output scores.
pub fn predict_mlp(model: &MlpModel, x: &[f64]) -> Result<(usize, ProbVector)> {
    let p = softmax(&model.scores(x)?)?;
    Ok((p.argmax(), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;
    use crate::linear::{fit_logistic, predict_logistic};
    use crate::numeric::finite_difference_gradient;

    pub(crate) fn xor(n_per_corner: usize, seed: u64) -> Dataset {
        let mut rng = SeededRng::new(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (cx, cy, label) in [(0.0, 0.0, 0), (1.0, 1.0, 0), (0.0, 1.0, 1), (1.0, 0.0, 1)] {
            for _ in 0..n_per_corner {
                rows.push(vec![cx + rng.uniform(-0.15, 0.15), cy + rng.uniform(-0.15, 0.15)]);
                y.push(label);
            }
        }
        Dataset::new(
            FeatureSchema::continuous(2, 2).unwrap(),
            Matrix::from_rows(&rows).unwrap(),
            y,
        )
        .unwrap()
    }

    fn accuracy(d: &Dataset, f: impl Fn(&[f64]) -> usize) -> f64 {
        (0..d.len()).filter(|&i| f(d.x.row(i)) == d.y[i]).count() as f64 / d.len() as f64
    }

    fn xor_cfg() -> GdConfig {
        GdConfig {
            learning_rate: 0.5,
            epochs: 2000,
            l2: 0.0,
            seed: 4,
        }
    }

    #[test]
    fn learns_xor_where_logistic_cannot() {
        let d = xor(10, 1);
        let m = fit_mlp(&d, 8, &xor_cfg()).unwrap();
        let mlp_acc = accuracy(&d, |x| predict_mlp(&m, x).unwrap().0);
        let lr = fit_logistic(&d, &GdConfig::logistic_default()).unwrap();
        let lr_acc = accuracy(&d, |x| predict_logistic(&lr, x).unwrap().0);
        assert!(mlp_acc >= 0.95, "mlp {mlp_acc}");
        assert!(lr_acc <= 0.75, "logistic {lr_acc}");
        // in-sample point keeps its label
        assert_eq!(predict_mlp(&m, d.x.row(0)).unwrap().0, d.y[0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(21);
        let (n, d, h, k) = (20, 4, 3, 3);
        let z = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let y: Vec<usize> = (0..n).map(|i| (i * 7) % k).collect();
        let rows: Vec<usize> = (0..n).collect();
        let len = h * (d + 1) + k * (h + 1);
        let theta: Vec<f64> = (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (_, grad) = mlp_objective(&theta, &z, &y, h, k, 0.01, &rows);
        let fd = finite_difference_gradient(|p| mlp_objective(p, &z, &y, h, k, 0.01, &rows).0, &theta, 1e-5)
            .unwrap();
        for (a, b) in grad.iter().zip(&fd) {
            assert!(
                (a - b).abs() <= 1e-4 * a.abs().max(b.abs()).max(1e-3),
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let d = xor(5, 2);
        let cfg = GdConfig {
            epochs: 50,
            ..xor_cfg()
        };
        assert_eq!(fit_mlp(&d, 4, &cfg).unwrap(), fit_mlp(&d, 4, &cfg).unwrap());
    }

    #[test]
    fn zero_output_weights_are_uniform() {
        let d = xor(3, 3);
        let mut m = fit_mlp(
            &d,
            3,
            &GdConfig {
                epochs: 2,
                ..xor_cfg()
            },
        )
        .unwrap();
        m.w2 = Matrix::zeros(2, 4);
        let (label, p) = predict_mlp(&m, &[0.3, 0.7]).unwrap();
        assert_eq!(label, 0);
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
        assert!(predict_mlp(&m, &[0.3]).is_err());
    }

    #[test]
    fn trace_never_increases() {
        let d = xor(12, 5);
        let (_, trace) = fit_mlp_traced(
            &d,
            6,
            &GdConfig {
                learning_rate: 2.0,
                epochs: 200,
                ..xor_cfg()
            },
        )
        .unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let d = xor(3, 3);
        assert!(fit_mlp(&d, 0, &xor_cfg()).is_err());
        let single = d.subset(&[0, 1, 2]);
        assert!(matches!(fit_mlp(&single, 2, &xor_cfg()), Err(Error::SingleClass)));
    }
}
