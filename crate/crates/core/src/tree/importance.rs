use serde::{Deserialize, Serialize};

use crate::data::FeatureSchema;
use crate::error::{Error, Result};
use crate::tree::GbdtModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    /// 1-based.
    pub rank: usize,
    pub feature: String,
    pub importance: f64,
}

/// Features ranked by normalized split gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
    /// 1 when any split happened, otherwise 0.
    pub total: f64,
}

impl ImportanceReport {
    pub fn top(&self) -> Option<&ImportanceEntry> {
        self.entries.first()
    }

    pub fn get(&self, feature: &str) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }
}

/// Normalize the model's accumulated split gain to sum 1 and rank features by
/// it, descending. Equal importances keep schema order.
pub fn feature_importance(model: &GbdtModel, schema: &FeatureSchema) -> Result<ImportanceReport> {
    if schema.len() != model.importance_raw.len() {
        return Err(Error::DimensionMismatch {
            expected: model.importance_raw.len(),
            found: schema.len(),
        });
    }
    let sum: f64 = model.importance_raw.iter().sum();
    let normalized: Vec<f64> = if sum > 0.0 {
        model.importance_raw.iter().map(|v| v / sum).collect()
    } else {
        vec![0.0; model.importance_raw.len()]
    };
    let mut order: Vec<usize> = (0..normalized.len()).collect();
    order.sort_by(|&a, &b| normalized[b].total_cmp(&normalized[a]).then(a.cmp(&b)));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(r, j)| ImportanceEntry {
            rank: r + 1,
            feature: schema.features[j].name.clone(),
            importance: normalized[j],
        })
        .collect();
    Ok(ImportanceReport {
        entries,
        total: normalized.iter().sum(),
    })
}
