use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Fetcher, IngestError, Request, Source};
use crate::model::{normalize_name, PackageSnapshot, PackageStatus};
use crate::score::{MetricBreakdown, METRIC_NAMES, STATUS_PENALTY};

/// Provider wire name → metric name. The provider's documents use a few
/// names of their own; everything else matches our metric names.
fn canonical_metric(wire: &str) -> Option<&'static str> {
    let mapped = match wire {
        "repository_present" => "source_repository_present",
        "versions_present" => "has_multiple_versions",
        "one_point_oh" => "ge_1_0_0",
        "dependent_projects" => "dependent_packages",
        other => other,
    };
    METRIC_NAMES.iter().copied().find(|m| *m == mapped)
}

const HIDDEN: [&str; 5] = [
    "all_prereleases",
    "any_outdated_dependencies",
    "is_deprecated",
    "is_unmaintained",
    "is_removed",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenFlags {
    pub all_prereleases: bool,
    pub any_outdated_dependencies: bool,
    pub is_deprecated: bool,
    pub is_unmaintained: bool,
    pub is_removed: bool,
}

impl HiddenFlags {
    fn set(&mut self, metric: &str, on: bool) {
        match metric {
            "all_prereleases" => self.all_prereleases = on,
            "any_outdated_dependencies" => self.any_outdated_dependencies = on,
            "is_deprecated" => self.is_deprecated = on,
            "is_unmaintained" => self.is_unmaintained = on,
            "is_removed" => self.is_removed = on,
            _ => {}
        }
    }

    pub fn status(&self) -> Option<PackageStatus> {
        if self.is_removed {
            Some(PackageStatus::Removed)
        } else if self.is_deprecated {
            Some(PackageStatus::Deprecated)
        } else if self.is_unmaintained {
            Some(PackageStatus::Unmaintained)
        } else {
            None
        }
    }
}

/// The provider's view of one package, kept for parity checks only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceProjectRecord {
    pub name: String,
    pub reported_rank: i64,
    /// Published per-metric values under our metric names.
    pub visible: BTreeMap<String, i64>,
    pub hidden: HiddenFlags,
    pub dependents_count: Option<u64>,
    pub dependent_repos_count: Option<u64>,
    pub status: Option<PackageStatus>,
    /// Wire fields that did not map to a metric.
    pub unknown_fields: Vec<String>,
}

fn as_i64(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f.round() as i64)),
        Value::Bool(b) => Some(i64::from(*b)),
        _ => None,
    }
}

/// Hidden metrics arrive either as booleans or as their (negative)
/// contribution.
fn as_flag(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        other => as_i64(other).map(|n| n != 0),
    }
}

fn parse_status(s: &str) -> Option<PackageStatus> {
    match s.to_ascii_lowercase().as_str() {
        "removed" => Some(PackageStatus::Removed),
        "deprecated" => Some(PackageStatus::Deprecated),
        "unmaintained" => Some(PackageStatus::Unmaintained),
        "active" => Some(PackageStatus::Active),
        _ => None,
    }
}

fn flag_contribution(metric: &str, on: bool) -> i64 {
    match (metric, on) {
        (_, false) => 0,
        ("all_prereleases" | "any_outdated_dependencies", true) => -1,
        (_, true) => STATUS_PENALTY,
    }
}

/// Builds a record from the project document and, when available, the
/// per-metric breakdown document. Unknown fields are tolerated.
pub fn parse_reference(project_json: &str, breakdown_json: Option<&str>) -> Result<ReferenceProjectRecord, IngestError> {
    let project: serde_json::Map<String, Value> =
        serde_json::from_str(project_json).map_err(|e| IngestError::parse("reference project document", e))?;
    let name = project
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| IngestError::parse("reference project document", "missing name"))?
        .to_string();
    let reported_rank = project
        .get("rank")
        .and_then(as_i64)
        .ok_or_else(|| IngestError::parse("reference project document", "missing integer rank"))?;

    let mut record = ReferenceProjectRecord {
        name,
        reported_rank,
        visible: BTreeMap::new(),
        hidden: HiddenFlags::default(),
        dependents_count: project.get("dependents_count").and_then(Value::as_u64),
        dependent_repos_count: project.get("dependent_repos_count").and_then(Value::as_u64),
        status: project.get("status").and_then(Value::as_str).and_then(parse_status),
        unknown_fields: Vec::new(),
    };

    let mut absorb = |fields: &serde_json::Map<String, Value>, strict: bool| {
        for (wire, value) in fields {
            match canonical_metric(wire) {
                Some(metric) if HIDDEN.contains(&metric) => {
                    if let Some(on) = as_flag(value) {
                        record.hidden.set(metric, on);
                        record.visible.insert(metric.to_string(), flag_contribution(metric, on));
                    }
                }
                Some(metric) => {
                    if let Some(n) = as_i64(value) {
                        record.visible.insert(metric.to_string(), n);
                    }
                }
                None if strict => record.unknown_fields.push(wire.clone()),
                None => {}
            }
        }
    };
    absorb(&project, false);
    if let Some(json) = breakdown_json {
        let fields: serde_json::Map<String, Value> =
            serde_json::from_str(json).map_err(|e| IngestError::parse("reference breakdown document", e))?;
        absorb(&fields, true);
    }
    if record.status.is_none() {
        record.status = record.hidden.status();
    }
    Ok(record)
}

pub fn fetch_reference_record(name: &str, fetcher: &Fetcher) -> Result<ReferenceProjectRecord, IngestError> {
    let normalized = normalize_name(name).map_err(|e| IngestError::parse("package name", e))?;
    let policy = fetcher.policy();
    let key_param = if policy.offline {
        String::new()
    } else {
        let key = policy.credentials.librariesio_key().ok_or_else(|| {
            IngestError::Credential(format!(
                "{} is not set; the scoring provider requires an API key",
                policy.credentials.librariesio_key_var
            ))
        })?;
        format!("?api_key={key}")
    };
    let base = format!("https://libraries.io/api/pypi/{normalized}");
    let project = fetcher.get_ok(
        &Request::new(Source::LibrariesIo, format!("{normalized}.json"), format!("{base}{key_param}")),
        &format!("reference record {normalized}"),
    )?;
    let breakdown = fetcher.get(&Request::new(
        Source::LibrariesIo,
        format!("{normalized}.sourcerank.json"),
        format!("{base}/sourcerank{key_param}"),
    ))?;
    parse_reference(&project, breakdown.is_success().then_some(breakdown.body.as_str()))
}

/// Copies provider-only counts and status into a snapshot.
pub fn enrich_snapshot(pkg: &mut PackageSnapshot, record: &ReferenceProjectRecord) {
    if let Some(n) = record.dependents_count {
        pkg.dependents_count = n;
    }
    if let Some(n) = record.dependent_repos_count {
        pkg.dependent_repos_count = n;
    }
    if let Some(status) = record.status {
        pkg.status = status;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricMismatch {
    pub metric: String,
    pub reported: i64,
    pub recomputed: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub name: String,
    pub reported_rank: i64,
    pub recomputed_rank: i64,
    pub mismatches: Vec<MetricMismatch>,
}

impl ParityReport {
    pub fn is_match(&self) -> bool {
        self.reported_rank == self.recomputed_rank && self.mismatches.is_empty()
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_match() {
            "match"
        } else {
            "mismatch"
        }
    }
}

/// Compares the provider's numbers with a local recomputation, metric by
/// metric for every metric the provider published.
pub fn parity_report(record: &ReferenceProjectRecord, ours: &MetricBreakdown) -> ParityReport {
    let mismatches = record
        .visible
        .iter()
        .filter_map(|(metric, &reported)| {
            let recomputed = ours.get(metric)?;
            (reported != recomputed).then(|| MetricMismatch {
                metric: metric.clone(),
                reported,
                recomputed,
            })
        })
        .collect();
    ParityReport {
        name: record.name.clone(),
        reported_rank: record.reported_rank,
        recomputed_rank: ours.total,
        mismatches,
    }
}
