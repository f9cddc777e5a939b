//! Line-delimited JSON persistence for snapshots, labels and corpora.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CorpusEntry, Label, LabeledCorpus, ModelError, PackageSnapshot, RepoSnapshot, Timestamp};

/// One line of a snapshot file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub package: PackageSnapshot,
    #[serde(default)]
    pub repo: Option<RepoSnapshot>,
}

impl SnapshotRecord {
    pub fn new(package: PackageSnapshot, repo: Option<RepoSnapshot>) -> Self {
        Self { package, repo }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, ModelError> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ModelError::NotFound(path.display().to_string()))
        }
        Err(source) => Err(ModelError::Io {
            path: path.display().to_string(),
            source,
        }),
    }
}

/// Reads `path` line by line, skipping blank lines. Line numbers are 1-based.
fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, ModelError> {
    let reader = open(path)?;
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| ModelError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, value));
    }
    Ok(out)
}

fn write_lines<T: Serialize>(items: impl IntoIterator<Item = T>, path: &Path) -> Result<(), ModelError> {
    let io_err = |source| ModelError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).expect("snapshot types always serialize");
        w.write_all(line.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

fn check_record(line: usize, record: &SnapshotRecord, seen: &mut HashSet<String>) -> Result<(), ModelError> {
    record
        .package
        .validate()
        .map_err(|message| ModelError::Parse { line, message })?;
    let key = record.package.normalized_name.as_str().to_string();
    if !seen.insert(key.clone()) {
        return Err(ModelError::Duplicate { line, name: key });
    }
    Ok(())
}

/// Loads a snapshot file. Records are returned in file order; duplicate
/// normalized names are rejected.
pub fn load_snapshots(path: impl AsRef<Path>) -> Result<Vec<SnapshotRecord>, ModelError> {
    let rows: Vec<(usize, SnapshotRecord)> = read_lines(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, record) in rows {
        check_record(line, &record, &mut seen)?;
        out.push(record);
    }
    Ok(out)
}

pub fn save_snapshots(records: &[SnapshotRecord], path: impl AsRef<Path>) -> Result<(), ModelError> {
    write_lines(records, path.as_ref())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Label>, ModelError> {
    let rows: Vec<(usize, Label)> = read_lines(path.as_ref())?;
    rows.into_iter()
        .map(|(line, label)| {
            label
                .validate()
                .map_err(|message| ModelError::Parse { line, message })?;
            Ok(label)
        })
        .collect()
}

pub fn save_labels(labels: &[Label], path: impl AsRef<Path>) -> Result<(), ModelError> {
    write_lines(labels, path.as_ref())
}

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    package: PackageSnapshot,
    #[serde(default)]
    repo: Option<RepoSnapshot>,
    label: Label,
}

/// Loads a labeled corpus: snapshot records carrying an extra `label` field.
pub fn load_corpus(path: impl AsRef<Path>, evaluation_time: Timestamp) -> Result<LabeledCorpus, ModelError> {
    let rows: Vec<(usize, CorpusLine)> = read_lines(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let record = SnapshotRecord::new(row.package, row.repo);
        check_record(line, &record, &mut seen)?;
        row.label
            .validate()
            .map_err(|message| ModelError::Parse { line, message })?;
        if row.label.name != record.package.normalized_name {
            return Err(ModelError::Parse {
                line,
                message: format!(
                    "label name {} does not match package {}",
                    row.label.name, record.package.normalized_name
                ),
            });
        }
        entries.push(CorpusEntry {
            package: record.package,
            repo: record.repo,
            label: row.label,
        });
    }
    Ok(LabeledCorpus {
        entries,
        evaluation_time,
    })
}

pub fn save_corpus(corpus: &LabeledCorpus, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let lines = corpus.entries.iter().map(|e| CorpusLine {
        package: e.package.clone(),
        repo: e.repo.clone(),
        label: e.label.clone(),
    });
    write_lines(lines, path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_timestamp, PackageStatus, Release};

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    fn record(name: &str) -> SnapshotRecord {
        let mut pkg = PackageSnapshot::new(name, ts("2024-12-01T00:00:00Z")).unwrap();
        pkg.releases.push(Release::new("0.1.0", ts("2024-11-01T00:00:00Z")));
        pkg.status = PackageStatus::Active;
        SnapshotRecord::new(pkg, None)
    }

    #[test]
    fn save_then_load_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.lines");
        let records = vec![record("alpha"), record("Beta_Pkg"), record("gamma")];
        save_snapshots(&records, &path).unwrap();
        let loaded = load_snapshots(&path).unwrap();
        assert_eq!(loaded, records);
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.lines");
        save_snapshots(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert!(load_snapshots(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_line_reports_line_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.lines");
        std::fs::write(&path, "{\"package\": {\"name\": \"x\"").unwrap();
        match load_snapshots(&path) {
            Err(ModelError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_not_found() {
        assert!(matches!(
            load_snapshots("/definitely/not/here.lines"),
            Err(ModelError::NotFound(_))
        ));
    }

    #[test]
    fn duplicate_normalized_names_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.lines");
        save_snapshots(&[record("foo_bar"), record("Foo.Bar")], &path).unwrap();
        match load_snapshots(&path) {
            Err(ModelError::Duplicate { line, name }) => {
                assert_eq!(line, 2);
                assert_eq!(name, "foo-bar");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unwritable_destination_is_io_error() {
        let err = save_snapshots(&[record("a")], "/proc/definitely/not/writable.lines");
        assert!(matches!(err, Err(ModelError::Io { .. })));
    }

    #[test]
    fn unsorted_releases_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("unsorted.lines");
        let mut r = record("a");
        r.package
            .releases
            .insert(0, Release::new("0.2.0", ts("2024-11-20T00:00:00Z")));
        save_snapshots(&[r], &path).unwrap();
        assert!(matches!(load_snapshots(&path), Err(ModelError::Parse { line: 1, .. })));
    }
}
