//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use rankguard_core::confusion::RepoRegistry;
use rankguard_core::model::{load_corpus, load_snapshots, parse_timestamp, LabeledCorpus, SnapshotRecord, Timestamp};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Evaluation time the fixtures were written against.
pub fn fixture_now() -> Timestamp {
    parse_timestamp("2024-12-01T00:00:00Z").expect("valid timestamp")
}

pub fn golden_snapshots() -> Vec<SnapshotRecord> {
    load_snapshots(fixtures().join("scoring/golden.lines")).expect("golden fixture loads")
}

pub fn confusion_corpus() -> (LabeledCorpus, RepoRegistry) {
    let dir = fixtures().join("confusion");
    (
        load_corpus(dir.join("cases.lines"), fixture_now()).expect("confusion corpus loads"),
        RepoRegistry::load(dir.join("registry.lines")).expect("registry loads"),
    )
}
