//! Score distributions, summary statistics, threshold sweeps, the removal
//! counterfactual and URL-confusion prevalence over a labeled corpus.

mod prevalence;
mod sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{LabeledCorpus, PackageStatus, Verdict};
use crate::score::{score_breakdown_with_index, IndexView};

pub use prevalence::{
    confusion_prevalence, prevalence_from_records, verdict_records, verdicts_csv, Prevalence, PrevalenceRow, VerdictRecord,
};
pub use sweep::{threshold_sweep, Sweep, SweepRow, DEFAULT_SWEEP_RANGE};

/// Score values always present in a histogram's support.
pub const SUPPORT_MIN: i64 = -5;
pub const SUPPORT_MAX: i64 = 32;

pub(crate) fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub(crate) fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Scores grouped by label, in corpus order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelScores {
    pub benign: Vec<i64>,
    pub malicious: Vec<i64>,
}

impl LabelScores {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Verdict, i64)>) -> Self {
        let mut out = Self::default();
        for (verdict, score) in pairs {
            out.get_mut(verdict).push(score);
        }
        out
    }

    pub fn get(&self, verdict: Verdict) -> &[i64] {
        match verdict {
            Verdict::Benign => &self.benign,
            Verdict::Malicious => &self.malicious,
        }
    }

    fn get_mut(&mut self, verdict: Verdict) -> &mut Vec<i64> {
        match verdict {
            Verdict::Benign => &mut self.benign,
            Verdict::Malicious => &mut self.malicious,
        }
    }
}

pub const LABELS: [Verdict; 2] = [Verdict::Benign, Verdict::Malicious];

/// Scores every entry at the corpus evaluation time. Entries are scored in
/// parallel; the result keeps corpus order.
pub fn score_corpus(corpus: &LabeledCorpus, index: Option<&IndexView>) -> Vec<(Verdict, i64)> {
    corpus
        .entries
        .par_iter()
        .map(|e| {
            let b = score_breakdown_with_index(&e.package, e.repo.as_ref(), corpus.evaluation_time, index);
            (e.label.verdict, b.total)
        })
        .collect()
}

pub fn label_scores(corpus: &LabeledCorpus, index: Option<&IndexView>) -> LabelScores {
    LabelScores::from_pairs(score_corpus(corpus, index))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub support_min: i64,
    pub support_max: i64,
    /// Occupied score values only; unoccupied values are implicitly 0.
    pub benign: BTreeMap<i64, f64>,
    pub malicious: BTreeMap<i64, f64>,
}

fn percentages(scores: &[i64]) -> BTreeMap<i64, f64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &s in scores {
        *counts.entry(s).or_default() += 1;
    }
    let n = scores.len() as f64;
    counts.into_iter().map(|(s, c)| (s, 100.0 * c as f64 / n)).collect()
}

impl Histogram {
    pub fn from_scores(scores: &LabelScores) -> Self {
        let observed = scores.benign.iter().chain(&scores.malicious);
        Self {
            support_min: observed.clone().copied().min().map_or(SUPPORT_MIN, |m| m.min(SUPPORT_MIN)),
            support_max: observed.copied().max().map_or(SUPPORT_MAX, |m| m.max(SUPPORT_MAX)),
            benign: percentages(&scores.benign),
            malicious: percentages(&scores.malicious),
        }
    }

    pub fn get(&self, verdict: Verdict) -> &BTreeMap<i64, f64> {
        match verdict {
            Verdict::Benign => &self.benign,
            Verdict::Malicious => &self.malicious,
        }
    }

    /// `score,label,percentage` over the full support for every non-empty
    /// label.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![vec!["score".into(), "label".into(), "percentage".into()]];
        for verdict in LABELS {
            let map = self.get(verdict);
            if map.is_empty() {
                continue;
            }
            for score in self.support_min..=self.support_max {
                let pct = map.get(&score).copied().unwrap_or(0.0);
                rows.push(vec![score.to_string(), verdict.as_str().into(), fmt4(pct)]);
            }
        }
        csv_string(rows)
    }
}

pub fn distribution(corpus: &LabeledCorpus) -> Histogram {
    Histogram::from_scores(&label_scores(corpus, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub label: Verdict,
    pub count: usize,
    pub min: i64,
    pub max: i64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub median: f64,
}

impl StatsRow {
    /// `None` for an empty sample.
    pub fn from_scores(label: Verdict, scores: &[i64]) -> Option<Self> {
        let n = scores.len();
        if n == 0 {
            return None;
        }
        let mut sorted = scores.to_vec();
        sorted.sort_unstable();
        let sum: i128 = sorted.iter().map(|&s| i128::from(s)).sum();
        let mean = sum as f64 / n as f64;
        let std = if n > 1 {
            let ss: f64 = sorted.iter().map(|&s| (s as f64 - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
        };
        Some(Self {
            label,
            count: n,
            min: sorted[0],
            max: sorted[n - 1],
            mean,
            std,
            median,
        })
    }

    /// `Min | Max | Mean ± Std | Median`, as printed in summary tables.
    pub fn display_row(&self) -> String {
        format!(
            "{:<9} {:>4} {:>4} {:>8.2} ± {:<6.2} {:>6.1}",
            self.label.as_str(),
            self.min,
            self.max,
            self.mean,
            self.std,
            self.median
        )
    }
}

pub fn stats_from_scores(scores: &LabelScores) -> Vec<StatsRow> {
    LABELS
        .iter()
        .filter_map(|&v| StatsRow::from_scores(v, scores.get(v)))
        .collect()
}

pub fn summary_stats(corpus: &LabeledCorpus) -> Vec<StatsRow> {
    stats_from_scores(&label_scores(corpus, None))
}

pub fn stats_csv(rows: &[StatsRow]) -> String {
    let mut out = vec![["label", "min", "max", "mean", "std", "median"].map(String::from).to_vec()];
    for r in rows {
        out.push(vec![
            r.label.as_str().into(),
            r.min.to_string(),
            r.max.to_string(),
            fmt4(r.mean),
            fmt4(r.std),
            fmt4(r.median),
        ]);
    }
    csv_string(out)
}

/// Copy of `corpus` with every malicious package marked removed.
pub fn counterfactual_removed(corpus: &LabeledCorpus) -> LabeledCorpus {
    let mut out = corpus.clone();
    for entry in &mut out.entries {
        if entry.label.verdict == Verdict::Malicious {
            entry.package.status = PackageStatus::Removed;
        }
    }
    out
}
