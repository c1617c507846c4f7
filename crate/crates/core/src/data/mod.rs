//! Dataset ingest: schema manifests, CSV loading, cleaning and encoding,
//! stratified fold plans and synthetic surrogates.

mod clean;
mod folds;
mod raw;
mod schema;
mod synthetic;

pub use clean::clean_and_encode;
pub use folds::{stratified_kfold, FoldPlan};
pub use raw::{load_raw, Cell, RawTable};
pub use schema::{FeatureKind, FeatureSchema, FeatureSpec};
pub use synthetic::{generate_synthetic, write_fixture, ColumnRange, FixtureManifest, SyntheticSpec};

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Clean numeric feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, x: Matrix, y: Vec<usize>) -> Result<Self> {
        if x.cols() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                found: x.cols(),
            });
        }
        if x.rows() != y.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= schema.n_classes) {
            return Err(Error::LabelOutOfDomain {
                label,
                n_classes: schema.n_classes,
            });
        }
        if let Some(v) = x.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v}")));
        }
        Ok(Dataset { schema, x, y })
    }

    /// Load, validate and clean a CSV file against a schema.
    pub fn from_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Self> {
        let raw = load_raw(path, schema)?;
        clean_and_encode(&raw, schema)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Number of classes with at least one record.
    pub fn classes_present(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// The dataset as a raw table of numeric cells (label last).
    pub fn to_raw_table(&self) -> RawTable {
        let mut header: Vec<String> = self.schema.names().map(str::to_string).collect();
        header.push(self.schema.label_name.clone());
        let rows = (0..self.len())
            .map(|i| {
                self.x
                    .row(i)
                    .iter()
                    .map(|&v| Cell::Num(v))
                    .chain(std::iter::once(Cell::Num(self.y[i] as f64)))
                    .collect()
            })
            .collect();
        RawTable {
            header,
            rows,
            lines: (2..self.len() + 2).collect(),
        }
    }

    /// Write the dataset as CSV, label last.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.schema.names().collect();
        header.push(&self.schema.label_name);
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            for v in self.x.row(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.y[i]));
        }
        out
    }

    /// SHA-256 over labels and the bit patterns of every feature value.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema.digest().as_bytes());
        for v in self.x.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in &self.y {
            h.update((l as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
