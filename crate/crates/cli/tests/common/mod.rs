//! Fixture pipeline shared by the end-to-end tests and the acceptance suite.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rankguard_cli::run_with_transport;
use rankguard_core::ingest::{CountingTransport, NoNetwork};

pub const NOW: &str = "2024-12-01T00:00:00Z";

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden_dir() -> PathBuf {
    fixtures().join("pipeline/golden")
}

/// Every CSV the pipeline writes, relative to the work directory.
pub const GOLDEN_FILES: [&str; 14] = [
    "feed.csv",
    "score.csv",
    "eval/distribution.csv",
    "eval/stats.csv",
    "sweep.csv",
    "counterfactual/observed_distribution.csv",
    "counterfactual/observed_stats.csv",
    "counterfactual/distribution.csv",
    "counterfactual/stats.csv",
    "counterfactual/sweep.csv",
    "confusion/verdicts.csv",
    "confusion/prevalence.csv",
    "evade.csv",
    "evade_plan.csv",
];

pub struct PipelineRun {
    pub network_calls: usize,
    pub elapsed: Duration,
}

fn join<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    [head, tail].concat()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Runs fetch, label, score, eval, sweep, counterfactual, confusion and
/// evade over the bundled fixtures, writing into `work`. Panics on any
/// non-zero exit.
pub fn run_pipeline(work: &Path) -> PipelineRun {
    let fx = fixtures();
    let recorded = s(&fx.join("pipeline/recorded"));
    let net = Arc::new(CountingTransport::new(NoNetwork));
    let w = |rel: &str| s(&work.join(rel));
    let offline = ["--offline", "--fixtures", recorded.as_str(), "--now", NOW];
    let plan = work.join("plan.json");
    std::fs::write(
        &plan,
        r#"[{"kind":"AddBasicInfo"},{"kind":"NewRepo","stars":200,"contributors":10,"readme":true},{"kind":"VersionGE1"}]"#,
    )
    .unwrap();

    let feed = w("feed.csv");
    let snapshots = w("snapshots.lines");
    let labels = w("labels.lines");
    let corpus = w("corpus.lines");
    let established = s(&fx.join("pipeline/established.txt"));
    let osv = s(&fx.join("pipeline/osv"));
    let registry = s(&fx.join("confusion/registry.lines"));
    let plan = s(&plan);
    let out_score = w("score.csv");
    let out_eval = w("eval");
    let out_sweep = w("sweep.csv");
    let out_counterfactual = w("counterfactual");
    let out_confusion = w("confusion");
    let out_evade = w("evade.csv");
    let out_evade_plan = w("evade_plan.csv");
    let now = ["--now", NOW];

    let steps: Vec<Vec<&str>> = vec![
        join(&offline, &["fetch-feed", "--since-days", "30", "--out", &feed]),
        join(&offline, &[
            "fetch-package",
            "--from-feed",
            &feed,
            "--names-file",
            &established,
            "--with-repo",
            "--enrich",
            "--out",
            &snapshots,
        ]),
        vec!["labels-osv", "--dir", &osv, "--out", &labels],
        join(&["label", "--snapshots", &snapshots, "--labels", &labels, "--assume-benign", "--out", &corpus], &now),
        join(&["score", "--snapshot", &snapshots, "--package", "requests", "--out", &out_score], &now),
        join(&["eval", "--corpus", &corpus, "--out", &out_eval], &now),
        join(&["sweep", "--corpus", &corpus, "--out", &out_sweep], &now),
        join(&["counterfactual", "--corpus", &corpus, "--out", &out_counterfactual], &now),
        join(&["confusion", "--corpus", &corpus, "--registry", &registry, "--out", &out_confusion], &now),
        join(&[
            "evade",
            "--snapshot",
            &snapshots,
            "--package",
            "quick-deploy-utils",
            "--full-stack",
            "--victim",
            "https://github.com/psf/requests",
            "--out",
            &out_evade,
        ], &now),
        join(&[
            "evade",
            "--snapshot",
            &snapshots,
            "--package",
            "jsonl-kit",
            "--plan",
            &plan,
            "--out",
            &out_evade_plan,
        ], &now),
    ];

    let start = Instant::now();
    for args in steps {
        let argv = std::iter::once("rankguard").chain(args.iter().copied());
        let code = run_with_transport(argv, net.clone());
        assert_eq!(code, 0, "rankguard {} exited {code}", args.join(" "));
    }
    PipelineRun {
        network_calls: net.calls(),
        elapsed: start.elapsed(),
    }
}

/// Compares every pipeline CSV with its golden copy, returning the names of
/// files that differ. With `BLESS=1` the golden copies are rewritten first.
pub fn compare_goldens(work: &Path) -> Vec<String> {
    let bless = std::env::var("BLESS").is_ok_and(|v| v == "1");
    let mut diffs = Vec::new();
    for rel in GOLDEN_FILES {
        let got = std::fs::read(work.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        let golden = golden_dir().join(rel);
        if bless {
            std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
            std::fs::write(&golden, &got).unwrap();
        }
        match std::fs::read(&golden) {
            Ok(want) if want == got => {}
            _ => diffs.push(rel.to_string()),
        }
    }
    diffs
}
