use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Binary,
    Ordinal,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Declared text codes for a binary column, e.g. `{"yes": 1, "no": 0}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codes: Option<BTreeMap<String, u8>>,
    /// Declared level names for a text-coded ordinal column, lowest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        FeatureSpec {
            name: name.into(),
            kind,
            unit: None,
            codes: None,
            levels: None,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn with_codes<'a>(mut self, codes: impl IntoIterator<Item = (&'a str, u8)>) -> Self {
        self.codes = Some(codes.into_iter().map(|(k, v)| (k.to_string(), v)).collect());
        self
    }
}

fn default_label() -> String {
    "label".to_string()
}

fn default_classes() -> usize {
    3
}

/// Ordered feature columns plus the label column of a dataset.
///
/// The JSON manifest looks like
/// `{"label": "label", "n_classes": 3, "features": [{"name": "Cough", "kind": "binary"}, ...]}`;
/// feature order in the array is the canonical column order of every matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(rename = "label", default = "default_label")]
    pub label_name: String,
    #[serde(default = "default_classes")]
    pub n_classes: usize,
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, label_name: impl Into<String>, n_classes: usize) -> Result<Self> {
        let schema = FeatureSchema {
            label_name: label_name.into(),
            n_classes,
            features,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// All-continuous schema with names `f0, f1, ...`.
    pub fn continuous(d: usize, n_classes: usize) -> Result<Self> {
        let features = (0..d)
            .map(|j| FeatureSpec::new(format!("f{j}"), FeatureKind::Continuous))
            .collect();
        Self::new(features, default_label(), n_classes)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("feature list is empty".into()));
        }
        if self.label_name.trim().is_empty() {
            return Err(Error::Schema("label column name is empty".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Schema(format!(
                "n_classes = {} (need at least 2)",
                self.n_classes
            )));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name.trim().is_empty() {
                return Err(Error::Schema("feature with an empty name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name \"{}\"", f.name)));
            }
            if f.name == self.label_name {
                return Err(Error::Schema(format!(
                    "feature \"{}\" collides with the label column",
                    f.name
                )));
            }
            if let Some(codes) = &f.codes {
                if f.kind != FeatureKind::Binary {
                    return Err(Error::Schema(format!(
                        "codes are only allowed on binary features (\"{}\")",
                        f.name
                    )));
                }
                if codes.values().any(|&v| v > 1) {
                    return Err(Error::Schema(format!(
                        "binary codes for \"{}\" must map to 0 or 1",
                        f.name
                    )));
                }
            }
            if f.levels.is_some() && f.kind != FeatureKind::Ordinal {
                return Err(Error::Schema(format!(
                    "levels are only allowed on ordinal features (\"{}\")",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("schema serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
