//! Config-driven experiments: load and clean the data, plan folds,
//! cross-validate every requested model, then assemble and emit the
//! comparison reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::SystemTime;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::data::{stratified_kfold, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::eval::{cross_validate_with_plan, CvReport};
use crate::model::{ModelSpec, TrainedModel};
use crate::tree::{feature_importance, ImportanceReport};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

impl ReportFormat {
    fn csv(self) -> bool {
        matches!(self, ReportFormat::Csv | ReportFormat::Both)
    }

    fn json(self) -> bool {
        matches!(self, ReportFormat::Json | ReportFormat::Both)
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "both" => Ok(ReportFormat::Both),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn default_k() -> usize {
    5
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("reports")
}

fn default_format() -> String {
    "both".into()
}

/// Experiment description, normally read from a JSON file. Relative paths
/// are resolved against the directory holding that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub models: Vec<String>,
    /// Per-model overrides of the default hyperparameters.
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, Value>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// `csv`, `json` or `both`.
    #[serde(default = "default_format")]
    pub format: String,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        for p in [&mut cfg.dataset, &mut cfg.schema, &mut cfg.out_dir] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_json_str(&s, base)
    }

    /// Model specs in configured order, with overrides applied.
    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        let mut specs = Vec::with_capacity(self.models.len());
        for name in &self.models {
            let spec = ModelSpec::with_overrides(name, self.hyperparameters.get(name))?;
            if specs.iter().any(|s: &ModelSpec| s.name() == spec.name()) {
                return Err(Error::Config(format!("model \"{name}\" is listed twice")));
            }
            specs.push(spec);
        }
        for name in self.hyperparameters.keys() {
            ModelSpec::from_name(name)?;
            if !self.models.contains(name) {
                return Err(Error::Config(format!(
                    "hyperparameters given for \"{name}\", which is not in the model list"
                )));
            }
        }
        Ok(specs)
    }

    pub fn report_format(&self) -> Result<ReportFormat> {
        self.format.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.model_specs()?;
        self.report_format()?;
        if self.k < 2 {
            return Err(Error::Config(format!("k = {}, need at least 2 folds", self.k)));
        }
        Ok(())
    }
}

/// Facts identifying a run. Wall-clock times are kept in memory only, so
/// written reports stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub toolkit_version: String,
    /// SHA-256 over the data, schema, model specs, k and seed.
    pub config_digest: String,
    pub dataset_digest: String,
    pub schema_digest: String,
    pub n_records: usize,
    pub n_features: usize,
    pub class_counts: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub fold_plan_digest: String,
    #[serde(skip)]
    pub started: Option<SystemTime>,
    #[serde(skip)]
    pub finished: Option<SystemTime>,
}

/// One row of the model comparison table; per-class vectors are indexed by
/// class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub accuracy: f64,
    pub fold_accuracy_mean: f64,
    pub fold_accuracy_std: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub reports: Vec<CvReport>,
    pub comparison: Vec<ComparisonRow>,
    pub importance: Option<ImportanceReport>,
}

fn load_stage(config: &ExperimentConfig) -> Result<Dataset> {
    for p in [&config.dataset, &config.schema] {
        if !p.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
    }
    let schema = FeatureSchema::from_json_file(&config.schema)?;
    Dataset::from_csv(&config.dataset, &schema)
}

/// Load and clean the configured dataset.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    load_stage(config).map_err(|e| e.in_stage("load"))
}

fn config_digest(dataset: &Dataset, specs: &[ModelSpec], k: usize, seed: u64) -> String {
    let canonical = serde_json::json!({
        "dataset": dataset.digest(),
        "schema": dataset.schema.digest(),
        "models": specs,
        "k": k,
        "seed": seed,
    });
    hex::encode(Sha256::digest(canonical.to_string()))
}

/// Run the four stages of an experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    let started = SystemTime::now();
    config.validate()?;
    let specs = config.model_specs()?;

    let dataset = load_dataset(config)?;

    let plan = stratified_kfold(&dataset, config.k, config.seed).map_err(|e| e.in_stage("folds"))?;

    let results: Vec<Result<CvReport>> = specs
        .par_iter()
        .map(|spec| cross_validate_with_plan(spec, &dataset, &plan).map_err(|e| e.in_stage(spec.name())))
        .collect();
    let reports = results
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("cross-validation"))?;

    let importance = specs
        .iter()
        .find(|s| matches!(s, ModelSpec::Gbdt(_)))
        .map(|spec| gbdt_importance(spec, &dataset, config.seed))
        .transpose()
        .map_err(|e| e.in_stage("comparison"))?;

    let mut bundle = ReportBundle {
        metadata: RunMetadata {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config_digest: config_digest(&dataset, &specs, config.k, config.seed),
            dataset_digest: dataset.digest(),
            schema_digest: dataset.schema.digest(),
            n_records: dataset.len(),
            n_features: dataset.n_features(),
            class_counts: dataset.class_counts(),
            k: config.k,
            seed: config.seed,
            fold_plan_digest: plan.digest(),
            started: Some(started),
            finished: None,
        },
        reports,
        comparison: Vec::new(),
        importance,
    };
    bundle.comparison = compare_models(&bundle).map_err(|e| e.in_stage("comparison"))?;
    bundle.metadata.finished = Some(SystemTime::now());
    Ok(bundle)
}

fn gbdt_importance(spec: &ModelSpec, dataset: &Dataset, seed: u64) -> Result<ImportanceReport> {
    match spec.fit(dataset, seed)? {
        TrainedModel::Gbdt(m) => feature_importance(&m, &dataset.schema),
        other => Err(Error::Config(format!(
            "expected a gbdt spec, got {}",
            other.name()
        ))),
    }
}

/// Fit the configured GBDT on the full dataset and rank its features.
pub fn importance_from_config(config: &ExperimentConfig) -> Result<ImportanceReport> {
    let over = config.hyperparameters.get("gbdt");
    let spec = ModelSpec::with_overrides("gbdt", over)?;
    let dataset = load_dataset(config)?;
    gbdt_importance(&spec, &dataset, config.seed).map_err(|e| e.in_stage("importance"))
}

/// Models ordered by pooled accuracy, highest first; equal accuracies are
/// ordered by model name.
pub fn compare_models(bundle: &ReportBundle) -> Result<Vec<ComparisonRow>> {
    if bundle.reports.is_empty() {
        return Err(Error::Config("report bundle holds no models".into()));
    }
    let mut rows: Vec<ComparisonRow> = bundle
        .reports
        .iter()
        .map(|r| ComparisonRow {
            model: r.model().to_string(),
            accuracy: r.accuracy,
            fold_accuracy_mean: r.fold_accuracy_mean,
            fold_accuracy_std: r.fold_accuracy_std,
            precision: r.per_class.iter().map(|c| c.precision).collect(),
            recall: r.per_class.iter().map(|c| c.recall).collect(),
            f1: r.per_class.iter().map(|c| c.f1).collect(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(rows)
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    let k = rows.first().map_or(0, |r| r.precision.len());
    let mut header: Vec<String> = ["model", "accuracy", "fold_accuracy_mean", "fold_accuracy_std"]
        .map(String::from)
        .to_vec();
    for c in 0..k {
        header.extend([format!("precision_{c}"), format!("recall_{c}"), format!("f1_{c}")]);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.model.clone(),
                fixed(r.accuracy),
                fixed(r.fold_accuracy_mean),
                fixed(r.fold_accuracy_std),
            ];
            for c in 0..k {
                cells.extend([fixed(r.precision[c]), fixed(r.recall[c]), fixed(r.f1[c])]);
            }
            cells
        })
        .collect();
    csv_string(&header, &body)
}

fn metrics_csv(report: &CvReport) -> Result<String> {
    let k = report.confusion.n_classes();
    let mut header: Vec<String> = ["class", "tp", "fp", "fn", "tn", "precision", "recall", "f1"]
        .map(String::from)
        .to_vec();
    header.extend((0..k).map(|p| format!("predicted_{p}")));
    header.extend(["precision_defined", "recall_defined", "f1_defined"].map(String::from));
    let body: Vec<Vec<String>> = report
        .per_class
        .iter()
        .map(|m| {
            let mut cells = vec![
                m.class_id.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                m.tn.to_string(),
                fixed(m.precision),
                fixed(m.recall),
                fixed(m.f1),
            ];
            cells.extend(report.confusion.counts[m.class_id].iter().map(u64::to_string));
            cells.extend([m.precision_defined, m.recall_defined, m.f1_defined].map(|b| b.to_string()));
            cells
        })
        .collect();
    csv_string(&header, &body)
}

/// Importances are written at full precision so the column sums to 1.
fn importance_csv(report: &ImportanceReport) -> Result<String> {
    let header = ["rank", "feature", "importance"].map(String::from);
    let body: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| vec![e.rank.to_string(), e.feature.clone(), format!("{}", e.importance)])
        .collect();
    csv_string(&header, &body)
}

/// Write the bundle under `dir` and return the written paths in order.
///
/// CSV: `comparison.csv`, `metrics_<model>.csv` per model and, when GBDT
/// ran, `importance.csv`. JSON: `summary.json` holding the whole bundle.
pub fn emit_report(bundle: &ReportBundle, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Output {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<(String, String)> = Vec::new();
    if format.csv() {
        files.push(("comparison.csv".into(), comparison_csv(&bundle.comparison)?));
        for r in &bundle.reports {
            files.push((format!("metrics_{}.csv", r.model()), metrics_csv(r)?));
        }
        if let Some(imp) = &bundle.importance {
            files.push(("importance.csv".into(), importance_csv(imp)?));
        }
    }
    if format.json() {
        files.push((
            "summary.json".into(),
            serde_json::to_string_pretty(bundle)? + "\n",
        ));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::Output {
            path: path.clone(),
            source: e,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Human-readable comparison table.
pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>9} {:>9} {:>9}",
        "model", "accuracy", "fold_mean", "fold_std"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>9.4} {:>9.4} {:>9.4}",
            r.model, r.accuracy, r.fold_accuracy_mean, r.fold_accuracy_std
        );
    }
    out
}
