//! Domain types shared by every other module: package and repository
//! snapshots, ground-truth labels and labeled corpora.

mod corpus;
mod name;
mod store;
mod time;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::version;

pub use corpus::{merge_labels, CorpusEntry, LabeledCorpus, MergeOutcome};
pub use name::{normalize_name, PackageName};
pub use store::{
    load_corpus, load_labels, load_snapshots, save_corpus, save_labels, save_snapshots,
    SnapshotRecord,
};
pub use time::{format_timestamp, parse_timestamp, truncate as truncate_timestamp, Timestamp};

pub(crate) use time::serde_ts;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate package {name}")]
    Duplicate { line: usize, name: String },
    #[error("conflicting labels for {name}: {first} vs {second}")]
    Conflict {
        name: String,
        first: String,
        second: String,
    },
    #[error("invalid package name: {0}")]
    InvalidName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackageStatus {
    #[default]
    Active,
    Deprecated,
    Unmaintained,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Release {
    pub version_text: String,
    #[serde(with = "serde_ts")]
    pub published_at: Timestamp,
    #[serde(default)]
    pub is_prerelease: bool,
}

impl Release {
    pub fn new(version_text: impl Into<String>, published_at: Timestamp) -> Self {
        let version_text = version_text.into();
        let is_prerelease = version::parse_semver(&version_text)
            .map(|v| v.is_prerelease())
            .unwrap_or(false);
        Self {
            version_text,
            published_at: time::truncate(published_at),
            is_prerelease,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    pub name: String,
    #[serde(default)]
    pub constraint: String,
}

impl Dependency {
    pub fn new(name: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            constraint: constraint.into(),
        }
    }
}

/// Registry-visible metadata of one package at `captured_at`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageSnapshot {
    pub name: String,
    pub normalized_name: PackageName,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub homepage_url: Option<String>,
    #[serde(default)]
    pub repo_url: Option<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Ascending by publish time.
    #[serde(default)]
    pub releases: Vec<Release>,
    #[serde(default)]
    pub dependents_count: u64,
    #[serde(default)]
    pub dependent_repos_count: u64,
    #[serde(default)]
    pub subscribers_count: u64,
    #[serde(default)]
    pub dependencies: Vec<Dependency>,
    #[serde(default)]
    pub status: PackageStatus,
    #[serde(with = "serde_ts")]
    pub captured_at: Timestamp,
}

impl PackageSnapshot {
    /// A bare snapshot with no metadata besides the name.
    pub fn new(name: &str, captured_at: Timestamp) -> Result<Self, ModelError> {
        Ok(Self {
            name: name.to_string(),
            normalized_name: PackageName::new(name)?,
            description: None,
            homepage_url: None,
            repo_url: None,
            keywords: Vec::new(),
            releases: Vec::new(),
            dependents_count: 0,
            dependent_repos_count: 0,
            subscribers_count: 0,
            dependencies: Vec::new(),
            status: PackageStatus::Active,
            captured_at: time::truncate(captured_at),
        })
    }

    pub fn earliest_release(&self) -> Option<&Release> {
        self.releases.iter().min_by_key(|r| r.published_at)
    }

    pub fn latest_release(&self) -> Option<&Release> {
        self.releases.iter().max_by_key(|r| r.published_at)
    }

    /// Checks the structural invariants, returning a description of the
    /// first violation.
    pub fn validate(&self) -> Result<(), String> {
        let expected = normalize_name(&self.name).map_err(|e| e.to_string())?;
        if expected != self.normalized_name.as_str() {
            return Err(format!(
                "normalized_name {:?} does not match name {:?} (expected {:?})",
                self.normalized_name.as_str(),
                self.name,
                expected
            ));
        }
        if self
            .releases
            .windows(2)
            .any(|w| w[0].published_at > w[1].published_at)
        {
            return Err("releases are not sorted by publish time".into());
        }
        for release in &self.releases {
            if release.version_text.is_empty() {
                return Err("release with empty version text".into());
            }
            if release.published_at > self.captured_at {
                return Err(format!(
                    "release {} published after captured_at",
                    release.version_text
                ));
            }
            if let Ok(v) = version::parse_semver(&release.version_text) {
                if v.is_prerelease() != release.is_prerelease {
                    return Err(format!(
                        "release {} has inconsistent is_prerelease flag",
                        release.version_text
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub name: String,
    #[serde(with = "serde_ts")]
    pub created_at: Timestamp,
}

impl Tag {
    pub fn new(name: impl Into<String>, created_at: Timestamp) -> Self {
        Self {
            name: name.into(),
            created_at: time::truncate(created_at),
        }
    }
}

/// Forge-visible metadata for a claimed source repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoSnapshot {
    pub url: String,
    pub host: String,
    pub owner: String,
    pub name: String,
    #[serde(default)]
    pub stars: u64,
    #[serde(default)]
    pub contributors_count: u64,
    #[serde(default)]
    pub has_readme: bool,
    #[serde(default)]
    pub tags: Vec<Tag>,
    #[serde(default)]
    pub manifest_package_names: Vec<String>,
    #[serde(with = "serde_ts")]
    pub captured_at: Timestamp,
}

impl RepoSnapshot {
    /// An empty snapshot for `url`, which must be a recognizable forge URL.
    pub fn from_url(url: &str, captured_at: Timestamp) -> Option<Self> {
        let id = crate::confusion::RepoId::parse(url)?;
        Some(Self {
            url: id.canonical_url(),
            host: id.host.clone(),
            owner: id.owner.clone(),
            name: id.name.clone(),
            stars: 0,
            contributors_count: 0,
            has_readme: false,
            tags: Vec::new(),
            manifest_package_names: Vec::new(),
            captured_at: time::truncate(captured_at),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Benign,
    Malicious,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Benign => "benign",
            Verdict::Malicious => "malicious",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Osv,
    Manual,
    Synthetic,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Osv => "osv",
            LabelSource::Manual => "manual",
            LabelSource::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub name: PackageName,
    pub verdict: Verdict,
    pub source: LabelSource,
    #[serde(default)]
    pub advisory_id: Option<String>,
}

impl Label {
    pub fn new(name: PackageName, verdict: Verdict, source: LabelSource) -> Self {
        Self {
            name,
            verdict,
            source,
            advisory_id: None,
        }
    }

    pub fn osv(name: PackageName, advisory_id: impl Into<String>) -> Self {
        Self {
            name,
            verdict: Verdict::Malicious,
            source: LabelSource::Osv,
            advisory_id: Some(advisory_id.into()),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.source == LabelSource::Osv && self.advisory_id.is_none() {
            return Err(format!("osv label for {} lacks an advisory id", self.name));
        }
        Ok(())
    }
}
