use std::path::{Path, PathBuf};

use mppdx::data::{clean_and_encode, load_raw, FeatureSchema, FixtureManifest};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn cleaned_fixture_matches_manifest() {
    let schema = FeatureSchema::from_json_file(fixture("synthetic_schema.json")).unwrap();
    let manifest: FixtureManifest =
        serde_json::from_str(&std::fs::read_to_string(fixture("synthetic_manifest.json")).unwrap()).unwrap();
    let raw = load_raw(fixture("synthetic.csv"), &schema).unwrap();
    let missing = raw.rows.iter().flatten().filter(|c| c.is_missing()).count();
    assert_eq!(missing, manifest.missing_cells);
    assert!(missing > 0);

    let d = clean_and_encode(&raw, &schema).unwrap();
    assert_eq!(d.len(), manifest.rows);
    assert_eq!(d.class_counts(), manifest.class_counts);
    for (j, col) in manifest.columns.iter().enumerate() {
        assert_eq!(schema.features[j].name, col.name);
        let (lo, hi) =
            d.x.column(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                });
        assert_eq!((lo, hi), (col.min, col.max), "column {}", col.name);
    }
}

#[test]
fn fixture_config_parses() {
    let cfg = mppdx::experiment::ExperimentConfig::load(fixture("fixture.json")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.model_specs().unwrap().len(), 5);
    assert!(cfg.dataset.is_file());
    assert!(cfg.schema.is_file());
}
