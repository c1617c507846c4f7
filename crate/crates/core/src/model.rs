//! Model specifications with hyperparameters, a uniform fit/predict front end
//! over the five classifiers, and the versioned JSON model document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::linear::{
    fit_logistic, fit_svm, predict_logistic, predict_svm, GdConfig, LogisticModel, SvmModel,
};
use crate::mlp::{fit_mlp, predict_mlp, MlpModel, DEFAULT_HIDDEN};
use crate::tree::{fit_gbdt, fit_tree, predict_gbdt, predict_tree, GbdtModel, GbdtParams, TreeModel};

pub const MODEL_NAMES: [&str; 5] = ["logistic", "tree", "gbdt", "svm", "mlp"];

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        let g = GdConfig::logistic_default();
        LogisticParams {
            learning_rate: g.learning_rate,
            epochs: g.epochs,
            l2: g.l2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 5,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Regularization strength; larger means a flatter hyperplane.
    pub reg_c: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        let g = GdConfig::svm_default();
        SvmParams {
            learning_rate: g.learning_rate,
            epochs: g.epochs,
            reg_c: g.l2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        let g = GdConfig::mlp_default();
        MlpParams {
            hidden: DEFAULT_HIDDEN,
            learning_rate: g.learning_rate,
            epochs: g.epochs,
            l2: g.l2,
        }
    }
}

/// A classifier name together with its hyperparameters.
///
/// Serializes as `{"model": "<name>", "hyperparameters": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "hyperparameters", rename_all = "lowercase")]
pub enum ModelSpec {
    Logistic(LogisticParams),
    Tree(TreeParams),
    Gbdt(GbdtParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl ModelSpec {
    /// Default hyperparameters for `name`.
    pub fn from_name(name: &str) -> Result<Self> {
        Self::with_overrides(name, None)
    }

    /// Defaults for `name` with the fields of `overrides` (a JSON object)
    /// replacing them. Unknown fields are rejected.
    pub fn with_overrides(name: &str, overrides: Option<&Value>) -> Result<Self> {
        if !MODEL_NAMES.contains(&name) {
            return Err(Error::UnknownModel(name.to_string()));
        }
        let params = match overrides {
            None | Some(Value::Null) => Value::Object(Default::default()),
            Some(v @ Value::Object(_)) => v.clone(),
            Some(other) => {
                return Err(Error::Config(format!(
                    "hyperparameters for {name} must be an object, got {other}"
                )))
            }
        };
        let tagged = serde_json::json!({ "model": name, "hyperparameters": params });
        let spec: ModelSpec =
            serde_json::from_value(tagged).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        spec.validate()
            .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        Ok(spec)
    }

    /// Check hyperparameter ranges without fitting anything.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Logistic(p) => gd(p.learning_rate, p.epochs, p.l2).validate(),
            ModelSpec::Tree(p) if p.min_samples_leaf == 0 => {
                Err(Error::InvalidParameter("min_samples_leaf must be >= 1".into()))
            }
            ModelSpec::Tree(_) => Ok(()),
            ModelSpec::Gbdt(p) => p.validate(),
            ModelSpec::Svm(p) => {
                gd(p.learning_rate, p.epochs, p.reg_c).validate()?;
                if p.reg_c > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "reg_c = {} must be > 0",
                        p.reg_c
                    )))
                }
            }
            ModelSpec::Mlp(p) if p.hidden == 0 => Err(Error::InvalidParameter("hidden must be >= 1".into())),
            ModelSpec::Mlp(p) => gd(p.learning_rate, p.epochs, p.l2).validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Logistic(_) => "logistic",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Gbdt(_) => "gbdt",
            ModelSpec::Svm(_) => "svm",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    pub fn hyperparameters(&self) -> Value {
        let v = match self {
            ModelSpec::Logistic(p) => serde_json::to_value(p),
            ModelSpec::Tree(p) => serde_json::to_value(p),
            ModelSpec::Gbdt(p) => serde_json::to_value(p),
            ModelSpec::Svm(p) => serde_json::to_value(p),
            ModelSpec::Mlp(p) => serde_json::to_value(p),
        };
        v.expect("plain parameter structs serialize")
    }

    /// Train on `dataset`; `seed` drives any randomness in the fit.
    pub fn fit(&self, dataset: &Dataset, seed: u64) -> Result<TrainedModel> {
        Ok(match *self {
            ModelSpec::Logistic(p) => {
                let cfg = GdConfig {
                    learning_rate: p.learning_rate,
                    epochs: p.epochs,
                    l2: p.l2,
                    seed,
                };
                TrainedModel::Logistic(fit_logistic(dataset, &cfg)?)
            }
            ModelSpec::Tree(p) => TrainedModel::Tree(fit_tree(dataset, p.max_depth, p.min_samples_leaf)?),
            ModelSpec::Gbdt(p) => TrainedModel::Gbdt(fit_gbdt(dataset, &p)?),
            ModelSpec::Svm(p) => {
                let cfg = GdConfig {
                    learning_rate: p.learning_rate,
                    epochs: p.epochs,
                    l2: p.reg_c,
                    seed,
                };
                TrainedModel::Svm(fit_svm(dataset, &cfg)?)
            }
            ModelSpec::Mlp(p) => {
                let cfg = GdConfig {
                    learning_rate: p.learning_rate,
                    epochs: p.epochs,
                    l2: p.l2,
                    seed,
                };
                TrainedModel::Mlp(fit_mlp(dataset, p.hidden, &cfg)?)
            }
        })
    }
}

fn gd(learning_rate: f64, epochs: usize, l2: f64) -> GdConfig {
    GdConfig {
        learning_rate,
        epochs,
        l2,
        seed: 0,
    }
}

/// A fitted classifier of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", content = "model", rename_all = "lowercase")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Gbdt(GbdtModel),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn name(&self) -> &'static str {
        match self {
            TrainedModel::Logistic(_) => "logistic",
            TrainedModel::Tree(_) => "tree",
            TrainedModel::Gbdt(_) => "gbdt",
            TrainedModel::Svm(_) => "svm",
            TrainedModel::Mlp(_) => "mlp",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Logistic(m) => Ok(predict_logistic(m, x)?.0),
            TrainedModel::Tree(m) => predict_tree(m, x),
            TrainedModel::Gbdt(m) => Ok(predict_gbdt(m, x)?.0),
            TrainedModel::Svm(m) => predict_svm(m, x),
            TrainedModel::Mlp(m) => Ok(predict_mlp(m, x)?.0),
        }
    }

    pub fn predict_all(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        dataset.x.iter_rows().map(|x| self.predict(x)).collect()
    }
}

/// On-disk form of a fitted model, tied to the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub schema_hash: String,
    #[serde(flatten)]
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(model: TrainedModel, schema: &FeatureSchema) -> Self {
        ModelDocument {
            format_version: FORMAT_VERSION,
            schema_hash: schema.digest(),
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model document version {} is not supported (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc)
    }

    /// The model, provided `schema` matches the one it was trained on.
    pub fn into_model_for(self, schema: &FeatureSchema) -> Result<TrainedModel> {
        if self.schema_hash != schema.digest() {
            return Err(Error::Schema(
                "model was trained against a different schema".into(),
            ));
        }
        Ok(self.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
