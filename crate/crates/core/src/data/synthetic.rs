use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, FeatureSchema, FeatureSpec};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, SeededRng};

const SCALES: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// Parameters of a planted-signal surrogate dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Features the label depends on.
    pub informative: Vec<usize>,
    /// Fraction of each class relabelled to another class, in `[0, 0.5]`.
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, informative: impl Into<Vec<usize>>, seed: u64) -> Self {
        SyntheticSpec {
            n,
            d,
            informative: informative.into(),
            noise: 0.0,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

/// Three-class dataset whose label depends only on the informative features.
///
/// Informative features are continuous. The label is the tertile (by rank) of
/// the mean of the informative features' uniform draws, so classes are
/// balanced to within one record. Uninformative features cycle through
/// continuous, binary and ordinal (0..=3) kinds, and continuous columns are
/// scaled by 1, 10, 100 or 1000 by column index. With no informative
/// features the labels are a balanced random assignment.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let SyntheticSpec {
        n,
        d,
        ref informative,
        noise,
        seed,
    } = *spec;
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "n = {n}, need at least 3 records"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("d = 0".into()));
    }
    if let Some(&bad) = informative.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidParameter(format!(
            "informative feature index {bad} out of range for d = {d}"
        )));
    }
    if !(0.0..=0.5).contains(&noise) {
        return Err(Error::InvalidParameter(format!(
            "noise = {noise} outside [0, 0.5]"
        )));
    }

    let kind_of = |j: usize| {
        if informative.contains(&j) {
            FeatureKind::Continuous
        } else {
            match j % 3 {
                0 => FeatureKind::Continuous,
                1 => FeatureKind::Binary,
                _ => FeatureKind::Ordinal,
            }
        }
    };
    let features = (0..d)
        .map(|j| FeatureSpec::new(format!("f{j}"), kind_of(j)))
        .collect();
    let schema = FeatureSchema::new(features, "label", 3)?;

    let mut rng = SeededRng::new(seed);
    let mut x = Matrix::zeros(n, d);
    let mut signal = vec![0.0; n];
    for i in 0..n {
        for j in 0..d {
            let u = rng.next_f64();
            let v = match kind_of(j) {
                FeatureKind::Continuous => u * SCALES[j % SCALES.len()],
                FeatureKind::Binary => (u >= 0.5) as u8 as f64,
                FeatureKind::Ordinal => (u * 4.0).floor(),
            };
            x.set(i, j, v);
            if informative.contains(&j) {
                signal[i] += u / informative.len() as f64;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    if informative.is_empty() {
        rng.shuffle(&mut order);
    } else {
        order.sort_by(|&a, &b| signal[a].total_cmp(&signal[b]).then(a.cmp(&b)));
    }
    let mut y = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        y[i] = rank * 3 / n;
    }

    if noise > 0.0 {
        let clean = y.clone();
        for class in 0..3 {
            let mut members: Vec<usize> = (0..n).filter(|&i| clean[i] == class).collect();
            rng.shuffle(&mut members);
            let flips = (noise * members.len() as f64).round() as usize;
            for (t, &i) in members.iter().take(flips).enumerate() {
                y[i] = (class + 1 + t % 2) % 3;
            }
        }
    }
    Dataset::new(schema, x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Expected post-cleaning facts about a fixture CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub rows: usize,
    pub class_counts: Vec<usize>,
    pub missing_cells: usize,
    pub columns: Vec<ColumnRange>,
}

/// Write `dataset` as a fixture: `<stem>.csv`, `<stem>_schema.json` and
/// `<stem>_manifest.json` under `dir`.
///
/// Binary columns are written as `yes`/`no` with declared codes, and a
/// `missing_rate` fraction of feature cells (never a whole column) is left
/// blank. The manifest ranges are taken over the values actually written.
pub fn write_fixture(
    dataset: &Dataset,
    dir: &Path,
    stem: &str,
    missing_rate: f64,
    seed: u64,
) -> Result<FixtureManifest> {
    if !(0.0..0.5).contains(&missing_rate) {
        return Err(Error::InvalidParameter(format!(
            "missing_rate = {missing_rate} outside [0, 0.5)"
        )));
    }
    let mut schema = dataset.schema.clone();
    for f in &mut schema.features {
        if f.kind == FeatureKind::Binary {
            f.codes = Some(
                [("no".to_string(), 0u8), ("yes".to_string(), 1u8)]
                    .into_iter()
                    .collect(),
            );
        }
    }

    let n = dataset.len();
    let d = dataset.n_features();
    let mut rng = SeededRng::with_stream(seed, 0x6d69_7373);
    let mut blank = vec![false; n * d];
    for (cell, b) in blank.iter_mut().enumerate() {
        // keep row 0 complete so no column is ever entirely missing
        *b = cell >= d && rng.next_f64() < missing_rate;
    }

    let mut columns: Vec<ColumnRange> = schema
        .features
        .iter()
        .map(|f| ColumnRange {
            name: f.name.clone(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        })
        .collect();
    let mut csv = String::new();
    let mut header: Vec<&str> = schema.names().collect();
    header.push(&schema.label_name);
    csv.push_str(&header.join(","));
    csv.push('\n');
    for i in 0..n {
        for j in 0..d {
            if !blank[i * d + j] {
                let v = dataset.x.get(i, j);
                columns[j].min = columns[j].min.min(v);
                columns[j].max = columns[j].max.max(v);
                if schema.features[j].kind == FeatureKind::Binary {
                    csv.push_str(if v == 1.0 { "yes" } else { "no" });
                } else {
                    csv.push_str(&format!("{v}"));
                }
            }
            csv.push(',');
        }
        csv.push_str(&format!("{}\n", dataset.y[i]));
    }

    let manifest = FixtureManifest {
        rows: n,
        class_counts: dataset.class_counts(),
        missing_cells: blank.iter().filter(|&&b| b).count(),
        columns,
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write(format!("{stem}.csv"), csv)?;
    write(format!("{stem}_schema.json"), schema.to_json_pretty() + "\n")?;
    write(
        format!("{stem}_manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}
