use std::path::PathBuf;

use forge_core::metrics::VerdictTable;
use forge_core::{pass_rate, weighted_accuracy, AccuracyRow};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/paper").join(name)
}

fn read<T: serde::de::DeserializeOwned>(name: &str) -> T {
    serde_json::from_slice(&std::fs::read(fixture(name)).unwrap()).unwrap()
}

#[test]
fn table1_weighted_accuracy() {
    let rows: Vec<AccuracyRow> = read("table1_accuracy.json");
    assert_eq!(rows.len(), 16);
    let acc = weighted_accuracy(&rows).unwrap();
    assert!((acc - 0.935).abs() <= 0.001, "{acc}");
}

#[test]
fn pass_at_1024_display() {
    let p = pass_rate(4898, 57231, 1024).unwrap();
    assert_eq!(p.display(), "8.6%");
}

#[test]
fn round6_verdict_table() {
    let table: VerdictTable = read("round6_verdicts.json");
    let stats = table.stats().unwrap();
    assert_eq!(stats.translated_count, 327870);
    assert_eq!(stats.cpn, 205079);
    assert_eq!(stats.npn, 57231);
    // per-tag marginals of the NLI-passing set are the Table 1 counts
    let rows: Vec<AccuracyRow> = read("table1_accuracy.json");
    for r in rows {
        assert_eq!(stats.per_tag_counts[&r.tag], r.count, "{}", r.tag);
    }
    let manifest = stats.into_manifest("final-round", "digest", 0);
    manifest.validate().unwrap();
}

#[test]
fn fixture_store_copy_is_identical() {
    let store = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/paper_store/rounds/6");
    assert_eq!(
        std::fs::read(store.join("verdicts.json")).unwrap(),
        std::fs::read(fixture("round6_verdicts.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(store.join("accuracy.json")).unwrap(),
        std::fs::read(fixture("table1_accuracy.json")).unwrap()
    );
}
