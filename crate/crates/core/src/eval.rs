//! Confusion matrices, one-vs-rest class metrics and k-fold cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numeric::SeededRng;

/// Number of classes assumed by [`confusion_matrix`].
pub const N_CLASSES: usize = 3;

/// Label-pair counts; `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
        }
    }

    /// Count `(truth, prediction)` pairs over `k` classes.
    pub fn from_labels(truths: &[usize], preds: &[usize], k: usize) -> Result<Self> {
        if truths.len() != preds.len() {
            return Err(Error::LengthMismatch {
                left: truths.len(),
                right: preds.len(),
            });
        }
        if truths.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut m = ConfusionMatrix::zeros(k);
        for (&a, &p) in truths.iter().zip(preds) {
            m.add(a, p)?;
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, actual: usize, predicted: usize) -> Result<()> {
        let k = self.n_classes();
        for label in [actual, predicted] {
            if label >= k {
                return Err(Error::LabelOutOfDomain { label, n_classes: k });
            }
        }
        self.counts[actual][predicted] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes(),
                found: other.n_classes(),
            });
        }
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum()
    }
}

/// Three-class confusion matrix of `truths` against `preds`.
pub fn confusion_matrix(truths: &[usize], preds: &[usize]) -> Result<ConfusionMatrix> {
    ConfusionMatrix::from_labels(truths, preds, N_CLASSES)
}

/// One-vs-rest counts and rates for one class. A rate whose denominator is
/// zero is reported as 0 with its `*_defined` flag cleared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: usize,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

pub fn per_class_metrics(m: &ConfusionMatrix, c: usize) -> Result<ClassMetrics> {
    let k = m.n_classes();
    if c >= k {
        return Err(Error::LabelOutOfDomain {
            label: c,
            n_classes: k,
        });
    }
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let tp = m.counts[c][c];
    let fp = (0..k).filter(|&a| a != c).map(|a| m.counts[a][c]).sum::<u64>();
    let fn_ = (0..k).filter(|&p| p != c).map(|p| m.counts[c][p]).sum::<u64>();
    let tn = total - tp - fp - fn_;
    let (precision, precision_defined) = ratio(tp, tp + fp);
    let (recall, recall_defined) = ratio(tp, tp + fn_);
    let f1_defined = precision_defined && recall_defined && precision + recall > 0.0;
    let f1 = if f1_defined {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassMetrics {
        class_id: c,
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
        precision_defined,
        recall_defined,
        f1_defined,
    })
}

pub fn overall_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(m.trace() as f64 / total as f64)
}

/// Pooled out-of-fold results of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    #[serde(flatten)]
    pub spec: ModelSpec,
    pub k: usize,
    pub seed: u64,
    pub fold_plan_digest: String,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub fold_accuracy_mean: f64,
    /// Population standard deviation of `fold_accuracies`.
    pub fold_accuracy_std: f64,
    /// Out-of-fold prediction for every record, in dataset order.
    pub predictions: Vec<usize>,
}

impl CvReport {
    pub fn model(&self) -> &'static str {
        self.spec.name()
    }
}

/// Seed handed to the fit of `fold`. Stream 0 belongs to the fold plan.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    SeededRng::with_stream(seed, fold as u64 + 1).next_u64()
}

/// Stratified k-fold cross-validation of `spec` on `dataset`.
pub fn cross_validate(spec: &ModelSpec, dataset: &Dataset, k: usize, seed: u64) -> Result<CvReport> {
    let plan = stratified_kfold(dataset, k, seed)?;
    cross_validate_with_plan(spec, dataset, &plan)
}

/// Cross-validation over an existing fold plan. Folds run in parallel; each
/// fold's fit is seeded from `(plan.seed, fold)`, so the result matches a
/// sequential run.
pub fn cross_validate_with_plan(spec: &ModelSpec, dataset: &Dataset, plan: &FoldPlan) -> Result<CvReport> {
    if plan.n_records() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: plan.n_records(),
        });
    }
    let k = dataset.n_classes();
    let fold_preds: Vec<Result<Vec<usize>>> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = dataset.subset(&plan.train_indices(f));
            let test = dataset.subset(plan.test_indices(f));
            let model = spec.fit(&train, fold_seed(plan.seed, f))?;
            model.predict_all(&test)
        })
        .collect();

    let mut predictions = vec![usize::MAX; dataset.len()];
    let mut confusion = ConfusionMatrix::zeros(k);
    let mut fold_accuracies = Vec::with_capacity(plan.k);
    for (f, preds) in fold_preds.into_iter().enumerate() {
        let wrap = |e: Error| Error::Fold {
            fold: f,
            source: Box::new(e),
        };
        let preds = preds.map_err(wrap)?;
        let idx = plan.test_indices(f);
        let truths: Vec<usize> = idx.iter().map(|&i| dataset.y[i]).collect();
        let m = ConfusionMatrix::from_labels(&truths, &preds, k).map_err(wrap)?;
        fold_accuracies.push(overall_accuracy(&m).map_err(wrap)?);
        confusion.merge(&m)?;
        for (&i, &p) in idx.iter().zip(&preds) {
            predictions[i] = p;
        }
    }

    let per_class = (0..k)
        .map(|c| per_class_metrics(&confusion, c))
        .collect::<Result<Vec<_>>>()?;
    let n = fold_accuracies.len() as f64;
    let mean = fold_accuracies.iter().sum::<f64>() / n;
    let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    Ok(CvReport {
        spec: *spec,
        k: plan.k,
        seed: plan.seed,
        fold_plan_digest: plan.digest(),
        accuracy: overall_accuracy(&confusion)?,
        confusion,
        per_class,
        fold_accuracies,
        fold_accuracy_mean: mean,
        fold_accuracy_std: var.sqrt(),
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, FeatureSchema, SyntheticSpec};
    use crate::numeric::Matrix;
    use proptest::prelude::*;

    fn example() -> ConfusionMatrix {
        confusion_matrix(&[0, 0, 1, 1, 2, 2], &[0, 1, 1, 1, 2, 0]).unwrap()
    }

    #[test]
    fn hand_counted_matrix() {
        assert_eq!(
            example().counts,
            vec![vec![1, 1, 0], vec![0, 2, 0], vec![1, 0, 1]]
        );
        let single = confusion_matrix(&[2], &[0]).unwrap();
        assert_eq!(single.counts[2][0], 1);
        assert_eq!(single.total(), 1);
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let y = [0, 2, 1, 1, 0, 2, 2];
        let m = confusion_matrix(&y, &y).unwrap();
        assert_eq!(m.counts, vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 3]]);
        assert_eq!(overall_accuracy(&m).unwrap(), 1.0);
        for c in 0..3 {
            let cm = per_class_metrics(&m, c).unwrap();
            assert_eq!((cm.precision, cm.recall, cm.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn class_one_metrics() {
        let cm = per_class_metrics(&example(), 1).unwrap();
        assert_eq!((cm.tp, cm.fp, cm.fn_, cm.tn), (2, 1, 0, 3));
        assert_eq!(cm.precision, 2.0 / 3.0);
        assert_eq!(cm.recall, 1.0);
        assert!((cm.f1 - 0.8).abs() < 1e-15);
        assert_eq!(overall_accuracy(&example()).unwrap(), 4.0 / 6.0);
    }

    #[test]
    fn absent_class_is_flagged() {
        let m = confusion_matrix(&[0, 1, 0], &[0, 1, 1]).unwrap();
        let cm = per_class_metrics(&m, 2).unwrap();
        assert_eq!((cm.tp, cm.fp, cm.fn_), (0, 0, 0));
        assert_eq!((cm.precision, cm.recall, cm.f1), (0.0, 0.0, 0.0));
        assert!(!cm.precision_defined && !cm.recall_defined && !cm.f1_defined);
    }

    #[test]
    fn zero_diagonal() {
        let m = confusion_matrix(&[0, 1, 2], &[1, 2, 0]).unwrap();
        assert_eq!(overall_accuracy(&m).unwrap(), 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            confusion_matrix(&[0, 1], &[0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(matches!(
            confusion_matrix(&[0, 3], &[0, 1]),
            Err(Error::LabelOutOfDomain { .. })
        ));
        assert!(confusion_matrix(&[], &[]).is_err());
        assert!(per_class_metrics(&example(), 3).is_err());
        assert!(overall_accuracy(&ConfusionMatrix::zeros(3)).is_err());
    }

    #[test]
    fn json_uses_fn_key() {
        let v = serde_json::to_value(per_class_metrics(&example(), 0).unwrap()).unwrap();
        assert_eq!(v["fn"], 1);
        assert!(v.get("fn_").is_none());
    }

    proptest! {
        #[test]
        fn micro_precision_is_accuracy(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..200)
        ) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let m = confusion_matrix(&t, &p).unwrap();
            let ms: Vec<ClassMetrics> = (0..3).map(|c| per_class_metrics(&m, c).unwrap()).collect();
            let tp: u64 = ms.iter().map(|c| c.tp).sum();
            let fp: u64 = ms.iter().map(|c| c.fp).sum();
            prop_assert_eq!(tp, m.trace());
            prop_assert_eq!(tp as f64 / (tp + fp) as f64, overall_accuracy(&m).unwrap());
            for c in &ms {
                prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn, m.total());
                if c.precision > 0.0 && c.recall > 0.0 {
                    let lo = c.precision.min(c.recall);
                    let hi = c.precision.max(c.recall);
                    prop_assert!(lo - 1e-15 <= c.f1 && c.f1 <= hi + 1e-15);
                }
            }
        }
    }

    #[test]
    fn lone_leaf_tree_scores_majority_share() {
        let d = generate_synthetic(&SyntheticSpec::new(90, 3, vec![0], 5)).unwrap();
        // Make class 0 the majority by relabelling a third of class 1.
        let mut y = d.y.clone();
        let mut moved = 0;
        for l in y.iter_mut() {
            if *l == 1 && moved < 10 {
                *l = 0;
                moved += 1;
            }
        }
        let d = Dataset::new(d.schema.clone(), d.x.clone(), y).unwrap();
        let spec = ModelSpec::with_overrides("tree", Some(&serde_json::json!({"max_depth": 0}))).unwrap();
        let r = cross_validate(&spec, &d, 5, 1).unwrap();
        let majority = *d.class_counts().iter().max().unwrap() as f64 / d.len() as f64;
        assert!((r.accuracy - majority).abs() < 1e-12);
    }

    #[test]
    fn every_record_predicted_once_and_deterministic() {
        let d = generate_synthetic(&SyntheticSpec::new(75, 4, vec![0, 1], 8)).unwrap();
        let spec = ModelSpec::with_overrides("gbdt", Some(&serde_json::json!({"rounds": 10}))).unwrap();
        let a = cross_validate(&spec, &d, 5, 3).unwrap();
        let b = cross_validate(&spec, &d, 5, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.confusion.total(), d.len() as u64);
        assert!(a.predictions.iter().all(|&p| p < 3));
        let rebuilt = confusion_matrix(&d.y, &a.predictions).unwrap();
        assert_eq!(rebuilt, a.confusion);
        assert_eq!(a.accuracy, a.confusion.trace() as f64 / d.len() as f64);
        assert_eq!(a.fold_accuracies.len(), 5);
    }

    #[test]
    fn fold_failures_name_the_fold() {
        let schema = FeatureSchema::continuous(1, 2).unwrap();
        let x = Matrix::from_vec(10, 1, (0..10).map(f64::from).collect()).unwrap();
        let d = Dataset::new(schema, x, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        let spec = ModelSpec::Gbdt(crate::tree::GbdtParams {
            shrinkage: 2.0,
            ..Default::default()
        });
        let e = cross_validate(&spec, &d, 2, 0).unwrap_err();
        assert!(matches!(e, Error::Fold { fold: 0, .. }), "{e}");
    }
}
