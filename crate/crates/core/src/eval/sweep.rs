use std::cmp::Ordering;
use std::ops::RangeInclusive;

use serde::Serialize;

use super::{csv_string, fmt4, LabelScores};

pub const DEFAULT_SWEEP_RANGE: RangeInclusive<i64> = -5..=33;

/// Confusion matrix at one threshold; the classifier flags a package as
/// malicious iff its score is below the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: i64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl SweepRow {
    pub fn new(threshold: i64, tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // 2PR/(P+R) reduced to counts, which avoids compounding rounding
        let f1 = if tp == 0 { 0.0 } else { ratio(2 * tp, 2 * tp + fp + fn_) };
        Self {
            threshold,
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    /// F1 as the exact fraction `2tp / (2tp + fp + fn)`.
    fn f1_fraction(&self) -> (u128, u128) {
        let num = 2 * u128::from(self.tp);
        (num, num + u128::from(self.fp) + u128::from(self.fn_))
    }

    /// Compares F1 exactly, so rows with equal F1 tie regardless of
    /// floating-point rounding.
    pub fn cmp_f1(&self, other: &Self) -> Ordering {
        let (a, b) = self.f1_fraction();
        let (c, d) = other.f1_fraction();
        match (a, c) {
            (0, 0) => Ordering::Equal,
            (0, _) => Ordering::Less,
            (_, 0) => Ordering::Greater,
            _ => (a * d).cmp(&(c * b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Maximum F1, smallest threshold on ties. `None` for an empty range.
    pub best: Option<SweepRow>,
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut out = vec![["threshold", "tp", "fp", "tn", "fn", "precision", "recall", "f1"]
            .map(String::from)
            .to_vec()];
        for r in &self.rows {
            out.push(vec![
                r.threshold.to_string(),
                r.tp.to_string(),
                r.fp.to_string(),
                r.tn.to_string(),
                r.fn_.to_string(),
                fmt4(r.precision),
                fmt4(r.recall),
                fmt4(r.f1),
            ]);
        }
        csv_string(out)
    }
}

/// Evaluates every integer threshold in `range`.
pub fn threshold_sweep(scores: &LabelScores, range: RangeInclusive<i64>) -> Sweep {
    let mut benign = scores.benign.clone();
    let mut malicious = scores.malicious.clone();
    benign.sort_unstable();
    malicious.sort_unstable();
    let below = |sorted: &[i64], t: i64| sorted.partition_point(|&s| s < t) as u64;

    let rows: Vec<SweepRow> = range
        .map(|t| {
            let tp = below(&malicious, t);
            let fp = below(&benign, t);
            SweepRow::new(t, tp, fp, benign.len() as u64 - fp, malicious.len() as u64 - tp)
        })
        .collect();
    let mut best: Option<&SweepRow> = None;
    for row in &rows {
        if best.is_none_or(|b| row.cmp_f1(b) == Ordering::Greater) {
            best = Some(row);
        }
    }
    let best = best.cloned();
    Sweep { rows, best }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(benign: &[i64], malicious: &[i64]) -> LabelScores {
        LabelScores {
            benign: benign.to_vec(),
            malicious: malicious.to_vec(),
        }
    }

    #[test]
    fn worked_example() {
        let sweep = threshold_sweep(&scores(&[1, 5, 7], &[0, 2, 6]), DEFAULT_SWEEP_RANGE);
        assert_eq!(sweep.rows.len(), 39);
        let t3 = sweep.rows.iter().find(|r| r.threshold == 3).unwrap();
        assert_eq!((t3.tp, t3.fp, t3.tn, t3.fn_), (2, 1, 2, 1));
        assert!((t3.f1 - 2.0 / 3.0).abs() < 1e-12);
        let best = sweep.best.unwrap();
        assert_eq!(best.threshold, 7);
        assert_eq!((best.precision, best.recall, best.f1), (0.6, 1.0, 0.75));
    }

    #[test]
    fn perfect_separation_picks_smallest_threshold() {
        let best = threshold_sweep(&scores(&[10], &[-3]), DEFAULT_SWEEP_RANGE).best.unwrap();
        assert_eq!((best.threshold, best.f1), (-2, 1.0));
    }

    #[test]
    fn all_benign_corpus() {
        let sweep = threshold_sweep(&scores(&[3, 4], &[]), DEFAULT_SWEEP_RANGE);
        assert!(sweep.rows.iter().all(|r| r.f1 == 0.0));
        assert_eq!(sweep.best.unwrap().threshold, -5);
    }

    #[test]
    fn csv_header_and_rows() {
        let sweep = threshold_sweep(&scores(&[1], &[0]), 0..=1);
        assert_eq!(
            sweep.to_csv(),
            "threshold,tp,fp,tn,fn,precision,recall,f1\n0,0,0,1,1,0.0000,0.0000,0.0000\n1,1,0,1,0,1.0000,1.0000,1.0000\n"
        );
    }
}
