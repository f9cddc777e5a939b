use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{csv_string, fmt4};
use crate::confusion::{classify_repo_claim, ConfusionVerdict, RepoRegistry};
use crate::model::{LabeledCorpus, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrevalenceRow {
    /// `owner/name` of the victim repository.
    pub victim_repo: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prevalence {
    /// Most-exploited victims first, ties by name.
    pub rows: Vec<PrevalenceRow>,
    pub total: usize,
    pub malicious: usize,
}

impl Prevalence {
    /// Share of malicious packages that were confused, in percent.
    pub fn percentage(&self) -> f64 {
        percent(self.total, self.malicious)
    }

    pub fn count_for(&self, victim_repo: &str) -> usize {
        self.rows
            .iter()
            .find(|r| r.victim_repo.eq_ignore_ascii_case(victim_repo))
            .map_or(0, |r| r.count)
    }

    /// `victim_repo,count,percentage` rows and a closing `total` row;
    /// percentages are of all malicious packages.
    pub fn to_csv(&self) -> String {
        let mut out = vec![["victim_repo", "count", "percentage"].map(String::from).to_vec()];
        for r in &self.rows {
            out.push(vec![
                r.victim_repo.clone(),
                r.count.to_string(),
                fmt4(percent(r.count, self.malicious)),
            ]);
        }
        out.push(vec!["total".into(), self.total.to_string(), fmt4(self.percentage())]);
        csv_string(out)
    }
}

fn percent(count: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        100.0 * count as f64 / of as f64
    }
}

/// One classified claim, as written to verdict reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub name: String,
    pub label: Verdict,
    pub repo_url: Option<String>,
    #[serde(flatten)]
    pub verdict: ConfusionVerdict,
}

impl VerdictRecord {
    pub fn victim_repo(&self) -> Option<String> {
        self.verdict.verdict.victim().map(|v| v.repo.slug())
    }
}

/// Classifies every entry of `corpus`, in corpus order.
pub fn verdict_records(corpus: &LabeledCorpus, registry: &RepoRegistry) -> Vec<VerdictRecord> {
    corpus
        .entries
        .par_iter()
        .map(|e| VerdictRecord {
            name: e.package.normalized_name.to_string(),
            label: e.label.verdict,
            repo_url: e.package.repo_url.clone(),
            verdict: classify_repo_claim(&e.package, e.repo.as_ref(), registry),
        })
        .collect()
}

/// `name,label,repo_url,verdict,victim,victim_repo,evidence` with evidence
/// codes joined by `;`.
pub fn verdicts_csv(records: &[VerdictRecord]) -> String {
    let mut out = vec![["name", "label", "repo_url", "verdict", "victim", "victim_repo", "evidence"]
        .map(String::from)
        .to_vec()];
    for r in records {
        let victim = r.verdict.verdict.victim();
        out.push(vec![
            r.name.clone(),
            r.label.as_str().into(),
            r.repo_url.clone().unwrap_or_default(),
            r.verdict.verdict.as_str().into(),
            victim.map(|v| v.name.clone()).unwrap_or_default(),
            r.victim_repo().unwrap_or_default(),
            r.verdict.evidence.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
        ]);
    }
    csv_string(out)
}

pub fn prevalence_from_records(records: &[VerdictRecord]) -> Prevalence {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut malicious = 0;
    for r in records.iter().filter(|r| r.label == Verdict::Malicious) {
        malicious += 1;
        if let Some(repo) = r.victim_repo() {
            *counts.entry(repo).or_default() += 1;
        }
    }
    let mut rows: Vec<PrevalenceRow> = counts
        .into_iter()
        .map(|(victim_repo, count)| PrevalenceRow { victim_repo, count })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.victim_repo.cmp(&b.victim_repo)));
    Prevalence {
        total: rows.iter().map(|r| r.count).sum(),
        rows,
        malicious,
    }
}

/// Confused claims among malicious packages, grouped by victim repository.
pub fn confusion_prevalence(corpus: &LabeledCorpus, registry: &RepoRegistry) -> Prevalence {
    prevalence_from_records(&verdict_records(corpus, registry))
}
