use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::SeededRng;

/// Partition of record indices into `k` disjoint test folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_records(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Every index outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != fold)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    /// SHA-256 of the fold contents, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for fold in &self.folds {
            h.update((fold.len() as u64).to_le_bytes());
            for &i in fold {
                h.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Stratified k-fold split.
///
/// Each class is shuffled with the seeded generator, the classes are laid end
/// to end, and position `p` of that sequence goes to fold `p mod k`. Every
/// class block is a contiguous run of the cycle, so each fold receives
/// `floor` or `ceil` of its proportional share of every class, and fold
/// sizes differ by at most one.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k}, need at least 2 folds")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
    for (i, &label) in dataset.y.iter().enumerate() {
        by_class[label].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::InsufficientClass {
                class,
                count: members.len(),
                k,
            });
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut position = 0usize;
    for members in &mut by_class {
        rng.shuffle(members);
        for &i in members.iter() {
            folds[position % k].push(i);
            position += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, folds, seed })
}
