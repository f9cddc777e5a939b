use std::collections::{HashMap, HashSet};

use super::{
    Label, LabelSource, ModelError, PackageName, PackageSnapshot, RepoSnapshot, SnapshotRecord,
    Timestamp, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub package: PackageSnapshot,
    pub repo: Option<RepoSnapshot>,
    pub label: Label,
}

/// Packages joined with ground-truth labels, scored at `evaluation_time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub entries: Vec<CorpusEntry>,
    pub evaluation_time: Timestamp,
}

impl LabeledCorpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.entries
            .iter()
            .filter(|e| e.label.verdict == verdict)
            .count()
    }

    pub fn malicious(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries
            .iter()
            .filter(|e| e.label.verdict == Verdict::Malicious)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutcome {
    pub corpus: LabeledCorpus,
    pub matched: usize,
    pub assumed_benign: usize,
    pub excluded: usize,
}

fn describe(label: &Label) -> String {
    match &label.advisory_id {
        Some(id) => format!("{} {} ({id})", label.source.as_str(), label.verdict.as_str()),
        None => format!("{} {}", label.source.as_str(), label.verdict.as_str()),
    }
}

/// Joins snapshots with labels by normalized name.
///
/// Unlabeled snapshots become `benign`/`manual` entries when `assume_benign`
/// is set and are excluded otherwise. Repeated labels with the same verdict
/// are tolerated (the first one wins); disagreeing verdicts are a conflict.
pub fn merge_labels(
    snapshots: &[SnapshotRecord],
    labels: &[Label],
    evaluation_time: Timestamp,
    assume_benign: bool,
) -> Result<MergeOutcome, ModelError> {
    let mut by_name: HashMap<&PackageName, &Label> = HashMap::new();
    for label in labels {
        match by_name.get(&label.name) {
            Some(prev) if prev.verdict != label.verdict => {
                return Err(ModelError::Conflict {
                    name: label.name.to_string(),
                    first: describe(prev),
                    second: describe(label),
                });
            }
            Some(_) => {}
            None => {
                by_name.insert(&label.name, label);
            }
        }
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let (mut matched, mut assumed_benign, mut excluded) = (0, 0, 0);
    for (idx, record) in snapshots.iter().enumerate() {
        let name = &record.package.normalized_name;
        if !seen.insert(name.clone()) {
            return Err(ModelError::Duplicate {
                line: idx + 1,
                name: name.to_string(),
            });
        }
        let label = match by_name.get(name) {
            Some(label) => {
                matched += 1;
                (*label).clone()
            }
            None if assume_benign => {
                assumed_benign += 1;
                Label::new(name.clone(), Verdict::Benign, LabelSource::Manual)
            }
            None => {
                excluded += 1;
                continue;
            }
        };
        entries.push(CorpusEntry {
            package: record.package.clone(),
            repo: record.repo.clone(),
            label,
        });
    }

    Ok(MergeOutcome {
        corpus: LabeledCorpus {
            entries,
            evaluation_time,
        },
        matched,
        assumed_benign,
        excluded,
    })
}
