use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};
use walkdir::WalkDir;

use super::IngestError;
use crate::model::{Label, PackageName};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OsvRecord {
    pub id: String,
    pub name: PackageName,
    pub ecosystem: String,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OsvLoad {
    pub records: Vec<OsvRecord>,
    /// One malicious label per affected package, from its first advisory.
    pub labels: Vec<Label>,
    /// Files that were not advisories.
    pub skipped: usize,
}

#[derive(Debug, Deserialize)]
struct Advisory {
    id: String,
    #[serde(default)]
    summary: Option<String>,
    affected: Vec<Affected>,
}

#[derive(Debug, Deserialize)]
struct Affected {
    package: Option<AffectedPackage>,
}

#[derive(Debug, Deserialize)]
struct AffectedPackage {
    ecosystem: String,
    name: String,
}

/// Reads every advisory under `dir` (recursively, in path order) and keeps
/// the packages in `ecosystem`, compared case-insensitively.
pub fn load_osv_labels(dir: impl AsRef<Path>, ecosystem: &str) -> Result<OsvLoad, IngestError> {
    let dir = dir.as_ref();
    let io = |source: std::io::Error| IngestError::Io {
        path: dir.display().to_string(),
        source,
    };
    if !std::fs::metadata(dir).map_err(io)?.is_dir() {
        return Err(io(std::io::Error::new(
            std::io::ErrorKind::NotADirectory,
            "advisory path is not a directory",
        )));
    }

    let mut out = OsvLoad::default();
    let mut seen_ids = HashSet::new();
    let mut labelled = HashSet::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Io {
            path: e.path().unwrap_or(dir).display().to_string(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory loop")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let advisory = std::fs::read_to_string(path)
            .ok()
            .and_then(|text| serde_json::from_str::<Advisory>(&text).ok());
        let Some(advisory) = advisory else {
            if path.extension().is_some_and(|e| e == "json") {
                warn!(path = %path.display(), "skipping unparseable advisory");
            } else {
                debug!(path = %path.display(), "skipping non-advisory file");
            }
            out.skipped += 1;
            continue;
        };
        if !seen_ids.insert(advisory.id.clone()) {
            continue;
        }
        for package in advisory.affected.into_iter().filter_map(|a| a.package) {
            if !package.ecosystem.eq_ignore_ascii_case(ecosystem) {
                continue;
            }
            let Ok(name) = PackageName::new(&package.name) else {
                continue;
            };
            if labelled.insert(name.clone()) {
                out.labels.push(Label::osv(name.clone(), advisory.id.clone()));
            }
            out.records.push(OsvRecord {
                id: advisory.id.clone(),
                name,
                ecosystem: package.ecosystem,
                summary: advisory.summary.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LabelSource, Verdict};

    fn advisory(id: &str, eco: &str, name: &str) -> String {
        format!(
            r#"{{"schema_version":"1.5.0","id":"{id}","summary":"Malicious code in {name} ({eco})",
               "affected":[{{"package":{{"ecosystem":"{eco}","name":"{name}"}}}}]}}"#
        )
    }

    #[test]
    fn loads_filters_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("pypi/discordbotpresence");
        std::fs::create_dir_all(&sub).unwrap();
        std::fs::write(sub.join("MAL-2024-0001.json"), advisory("MAL-2024-0001", "PyPI", "discordbotpresence")).unwrap();
        std::fs::write(dir.path().join("npm.json"), advisory("MAL-2024-0002", "npm", "left-pad-x")).unwrap();
        std::fs::write(dir.path().join("README.md"), "# not an advisory").unwrap();

        let load = load_osv_labels(dir.path(), "pypi").unwrap();
        assert_eq!(load.skipped, 1);
        assert_eq!(load.labels.len(), 1);
        let label = &load.labels[0];
        assert_eq!(label.name.as_str(), "discordbotpresence");
        assert_eq!((label.verdict, label.source), (Verdict::Malicious, LabelSource::Osv));
        assert_eq!(label.advisory_id.as_deref(), Some("MAL-2024-0001"));
    }

    #[test]
    fn empty_and_missing_directories() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_osv_labels(dir.path(), "PyPI").unwrap(), OsvLoad::default());
        assert!(matches!(
            load_osv_labels(dir.path().join("nope"), "PyPI"),
            Err(IngestError::Io { .. })
        ));
    }
}
