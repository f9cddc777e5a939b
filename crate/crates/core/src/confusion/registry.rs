use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RepoId;
use crate::model::PackageName;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("repository {repo} is owned by both {first} and {second}")]
    Conflict {
        repo: String,
        first: String,
        second: String,
    },
}

/// One line of a registry file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryRecord {
    pub repo_url: String,
    pub package_name: String,
    #[serde(default)]
    pub stars: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub repo: RepoId,
    pub package: PackageName,
    pub stars: u64,
}

/// Known repository to owning-package mapping.
#[derive(Debug, Clone, Default)]
pub struct RepoRegistry {
    by_key: BTreeMap<String, RegistryEntry>,
}

impl RepoRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, repo_url: &str, package_name: &str, stars: u64) -> Result<(), RegistryError> {
        let bad = |message: String| RegistryError::Parse { line: 0, message };
        let repo = RepoId::parse(repo_url).ok_or_else(|| bad(format!("not a repository url: {repo_url}")))?;
        let package = PackageName::new(package_name).map_err(|e| bad(e.to_string()))?;
        let key = repo.key();
        if let Some(existing) = self.by_key.get(&key) {
            if existing.package != package {
                return Err(RegistryError::Conflict {
                    repo: repo.slug(),
                    first: existing.package.to_string(),
                    second: package.to_string(),
                });
            }
            return Ok(());
        }
        self.by_key.insert(key, RegistryEntry { repo, package, stars });
        Ok(())
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RegistryRecord>) -> Result<Self, RegistryError> {
        let mut registry = Self::new();
        for (idx, r) in records.into_iter().enumerate() {
            registry
                .insert(&r.repo_url, &r.package_name, r.stars)
                .map_err(|e| match e {
                    RegistryError::Parse { message, .. } => RegistryError::Parse { line: idx + 1, message },
                    other => other,
                })?;
        }
        Ok(registry)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let io = |source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        };
        let reader = std::io::BufReader::new(std::fs::File::open(path).map_err(io)?);
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let record: RegistryRecord = serde_json::from_str(&line).map_err(|e| RegistryError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Self::from_records(&records)
    }

    pub fn lookup(&self, repo: &RepoId) -> Option<&RegistryEntry> {
        self.by_key.get(&repo.key())
    }

    /// Entries in canonical-URL order.
    pub fn entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.by_key.values()
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}
