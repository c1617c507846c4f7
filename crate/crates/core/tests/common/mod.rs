#![allow(dead_code)]

use mppdx::data::{Dataset, FeatureSchema};
use mppdx::numeric::{Matrix, SeededRng};

pub fn dataset(rows: &[Vec<f64>], y: Vec<usize>, k: usize) -> Dataset {
    let d = rows[0].len();
    Dataset::new(
        FeatureSchema::continuous(d, k).unwrap(),
        Matrix::from_rows(rows).unwrap(),
        y,
    )
    .unwrap()
}

/// Confusion counts, tp/fp/fn/tn, rates and accuracy by direct counting.
pub struct Counted {
    pub matrix: [[u64; 3]; 3],
    pub per_class: Vec<(u64, u64, u64, u64, f64, f64, f64)>,
    pub accuracy: f64,
}

pub fn count_oracle(truths: &[usize], preds: &[usize]) -> Counted {
    let mut matrix = [[0u64; 3]; 3];
    let mut correct = 0u64;
    for i in 0..truths.len() {
        matrix[truths[i]][preds[i]] += 1;
        if truths[i] == preds[i] {
            correct += 1;
        }
    }
    let per_class = (0..3)
        .map(|c| {
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for i in 0..truths.len() {
                match (truths[i] == c, preds[i] == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            let p = if tp + fp > 0 {
                tp as f64 / (tp + fp) as f64
            } else {
                0.0
            };
            let r = if tp + fn_ > 0 {
                tp as f64 / (tp + fn_) as f64
            } else {
                0.0
            };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (tp, fp, fn_, tn, p, r, f)
        })
        .collect();
    Counted {
        matrix,
        per_class,
        accuracy: correct as f64 / truths.len() as f64,
    }
}

fn gini_weighted(y: &[usize], idx: &[usize], k: usize) -> f64 {
    let mut counts = vec![0.0; k];
    for &i in idx {
        counts[y[i]] += 1.0;
    }
    let n = idx.len() as f64;
    n * (1.0 - counts.iter().map(|c: &f64| (c / n) * (c / n)).sum::<f64>())
}

/// Best root split by trying every feature and every midpoint between
/// consecutive distinct values, scoring by summed weighted child Gini.
/// Near-ties resolve to the lowest feature, then the lowest threshold.
pub fn brute_force_root(x: &[Vec<f64>], y: &[usize], k: usize, min_leaf: usize) -> Option<(usize, f64)> {
    let n = y.len();
    if y.iter().all(|&l| l == y[0]) {
        return None;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = (0..n).filter(|&i| x[i][f] <= t).collect();
            let right: Vec<usize> = (0..n).filter(|&i| x[i][f] > t).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let score = gini_weighted(y, &left, k) + gini_weighted(y, &right, k);
            let better = match best {
                None => true,
                Some((s, _, _)) => score < s - 1e-9,
            };
            if better {
                best = Some((score, f, t));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Random micro dataset: `n` rows over `d` features drawn from a small
/// value grid so ties and duplicates are common.
pub fn micro_dataset(rng: &mut SeededRng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.below(5) as f64 * 0.5).collect())
        .collect();
    let y: Vec<usize> = (0..n).map(|_| rng.below(3) as usize).collect();
    (x, y)
}

/// Largest elementwise `|a - b| / max(|a|, |b|, 1e-3)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-3))
        .fold(0.0, f64::max)
}
