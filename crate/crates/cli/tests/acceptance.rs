//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rankguard_core::confusion::{classify_repo_claim, RepoRegistry, Verdict as Claim};
use rankguard_core::eval::{
    confusion_prevalence, counterfactual_removed, label_scores, summary_stats, threshold_sweep, verdict_records,
    LabelScores, DEFAULT_SWEEP_RANGE,
};
use rankguard_core::evasion::{Budgets, Simulator, Technique};
use rankguard_core::ingest::{
    fetch_feed, fetch_package_metadata, fetch_repo_metadata, load_osv_labels, CountingTransport, FeedKind,
    FetchPolicy, Fetcher, NoNetwork,
};
use rankguard_core::model::{
    load_corpus, load_snapshots, parse_timestamp, LabeledCorpus, PackageSnapshot, PackageStatus, Release,
    RepoSnapshot, Timestamp, Verdict,
};
use rankguard_core::score::{log_bucket, score_breakdown, ScalingRule, METRIC_NAMES};
use rankguard_core::testkit::{arb_corpus, arb_package_with_repo, corpus_with_scores, sample};
use rankguard_core::version::{compare, parse_semver};

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn now() -> Timestamp {
    parse_timestamp(common::NOW).unwrap()
}

fn fixtures() -> PathBuf {
    common::fixtures()
}

fn golden_scoring() -> Result<(), String> {
    let dir = fixtures().join("scoring");
    let records = load_snapshots(dir.join("golden.lines")).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_path(dir.join("golden_expected.csv")).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut expected: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let values = headers.iter().zip(row.iter()).skip(1).map(|(h, v)| (h.to_string(), v.parse().unwrap()));
        expected.insert(row[0].to_string(), values.collect());
    }
    ensure!(records.len() == 20 && expected.len() == 20, "expected 20 packages");

    let started = Instant::now();
    let scored: Vec<_> = records
        .iter()
        .map(|r| (r.package.normalized_name.to_string(), score_breakdown(&r.package, r.repo.as_ref(), now())))
        .collect();
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "scoring took {elapsed:?}");

    for (name, b) in &scored {
        let want = expected.get(name).ok_or(format!("{name} missing from expected CSV"))?;
        for metric in METRIC_NAMES {
            ensure!(b.get(metric) == Some(want[metric]), "{name}.{metric}: {:?} != {}", b.get(metric), want[metric]);
        }
        ensure!(b.total == want["total"], "{name}: total {} != {}", b.total, want["total"]);
    }
    let total = |n: &str| scored.iter().find(|(name, _)| name == n).map(|(_, b)| b.total);
    ensure!(
        (total("minimal"), total("minimal-removed"), total("rich-pkg")) == (Some(2), Some(-3), Some(18)),
        "named totals differ"
    );
    Ok(())
}

/// Largest k with count^(2m) >= 10^(2k-1), i.e. round-half-up of
/// m*log10(count), in integers; `two_m` is 4, 2 or 1.
fn bucket_oracle(count: u64, two_m: u32) -> i64 {
    if count == 0 {
        return 0;
    }
    let lhs = u128::from(count).pow(two_m);
    let mut k = 0;
    while 10u128.pow(2 * (k + 1) - 1) <= lhs {
        k += 1;
    }
    i64::from(k)
}

fn log_bucket_exactness() -> Result<(), String> {
    for k in 0..=6u32 {
        let got = log_bucket(10u64.pow(k), ScalingRule::SINGLE);
        ensure!(got == i64::from(k), "10^{k} -> {got}");
    }
    for (rule, two_m) in [(ScalingRule::DOUBLE, 4), (ScalingRule::SINGLE, 2), (ScalingRule::HALF, 1)] {
        let mut prev = 0;
        for count in 0..=1_000_000u64 {
            let got = log_bucket(count, rule);
            ensure!(got >= prev, "decrease at {count}");
            ensure!(got == bucket_oracle(count, two_m), "count {count}: {got} != oracle");
            prev = got;
        }
    }
    Ok(())
}

fn removal_delta() -> Result<(), String> {
    let packages = sample(arb_package_with_repo(now()), 250);
    ensure!(packages.len() >= 200, "only {} packages", packages.len());
    for (pkg, repo) in packages {
        let mut active = pkg.clone();
        active.status = PackageStatus::Active;
        let mut removed = pkg;
        removed.status = PackageStatus::Removed;
        let a = score_breakdown(&active, repo.as_ref(), now()).total;
        let r = score_breakdown(&removed, repo.as_ref(), now()).total;
        ensure!(r - a == -5, "{}: removal moved {a} -> {r}", active.normalized_name);
    }
    Ok(())
}

/// F1 as an exact fraction (numerator, denominator), 0/1 when undefined.
fn f1_fraction(tp: u64, fp: u64, fn_: u64) -> (u64, u64) {
    if tp == 0 {
        return (0, 1);
    }
    // precision tp/(tp+fp), recall tp/(tp+fn): 2PR/(P+R) = 2tp / (2tp + fp + fn)
    let (pn, pd, rn, rd) = (tp, tp + fp, tp, tp + fn_);
    (2 * pn * rn, pn * rd + rn * pd)
}

fn sweep_oracle_equivalence() -> Result<(), String> {
    let corpora = sample(prop::collection::vec((-5i64..=32, any::<bool>()), 0..=10), 1000);
    for entries in corpora {
        let scores = LabelScores {
            benign: entries.iter().filter(|e| !e.1).map(|e| e.0).collect(),
            malicious: entries.iter().filter(|e| e.1).map(|e| e.0).collect(),
        };
        let sweep = threshold_sweep(&scores, DEFAULT_SWEEP_RANGE);
        let mut best: Option<(i64, (u64, u64))> = None;
        for (row, t) in sweep.rows.iter().zip(DEFAULT_SWEEP_RANGE) {
            let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
            for &(s, mal) in &entries {
                match (s < t, mal) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, false) => tn += 1,
                    (false, true) => fn_ += 1,
                }
            }
            ensure!(
                (row.threshold, row.tp, row.fp, row.tn, row.fn_) == (t, tp, fp, tn, fn_),
                "confusion counts differ at t={t} for {entries:?}"
            );
            let f1 = f1_fraction(tp, fp, fn_);
            ensure!((row.f1 - f1.0 as f64 / f1.1 as f64).abs() < 1e-12, "f1 differs at t={t}");
            if best.is_none_or(|(_, b)| u128::from(f1.0) * u128::from(b.1) > u128::from(b.0) * u128::from(f1.1)) {
                best = Some((t, f1));
            }
        }
        ensure!(sweep.rows.len() == 39, "sweep has {} rows", sweep.rows.len());
        ensure!(
            sweep.best.as_ref().map(|b| b.threshold) == best.map(|b| b.0),
            "best threshold differs for {entries:?}"
        );
    }
    let worked = threshold_sweep(
        &LabelScores {
            benign: vec![1, 5, 7],
            malicious: vec![0, 2, 6],
        },
        DEFAULT_SWEEP_RANGE,
    );
    let best = worked.best.ok_or("no best row")?;
    ensure!(best.threshold == 7 && best.f1 == 0.75, "worked corpus best ({}, {})", best.threshold, best.f1);
    Ok(())
}

fn mean(v: &[i64]) -> f64 {
    v.iter().sum::<i64>() as f64 / v.len() as f64
}

fn shift_matches(corpus: &LabeledCorpus, moves: impl Fn(PackageStatus) -> bool) -> Result<(), String> {
    let before = label_scores(corpus, None);
    let after = label_scores(&counterfactual_removed(corpus), None);
    ensure!(before.benign == after.benign, "benign scores changed");
    if before.malicious.is_empty() {
        return Ok(());
    }
    let moved = corpus.malicious().filter(|e| moves(e.package.status)).count();
    let fraction = moved as f64 / before.malicious.len() as f64;
    let shift = mean(&after.malicious) - mean(&before.malicious);
    ensure!((shift + 5.0 * fraction).abs() < 1e-9, "shift {shift} vs fraction {fraction}");
    Ok(())
}

/// 210 malicious scores spread like a stale real-world sample.
fn stale_sample() -> Vec<i64> {
    let mut scores = vec![-3; 6];
    for (score, n) in [(0, 4), (1, 5), (2, 30), (3, 96), (4, 19), (5, 31), (7, 13), (11, 5), (15, 1)] {
        scores.extend(std::iter::repeat_n(score, n));
    }
    scores
}

fn counterfactual_identity() -> Result<(), String> {
    for mut corpus in sample(arb_corpus(now(), 16), 300) {
        // the other exclusive statuses already carry a -5 of their own
        shift_matches(&corpus, |s| s == PackageStatus::Active)?;
        for e in &mut corpus.entries {
            if matches!(e.package.status, PackageStatus::Deprecated | PackageStatus::Unmaintained) {
                e.package.status = PackageStatus::Active;
            }
        }
        shift_matches(&corpus, |s| s != PackageStatus::Removed)?;
    }

    let corpus = corpus_with_scores(&[12, 14, 15, 9], &stale_sample(), 6, now());
    let mal = |stats: Vec<rankguard_core::eval::StatsRow>| stats.into_iter().find(|r| r.label == Verdict::Malicious);
    let before = mal(summary_stats(&corpus)).ok_or("no malicious row")?;
    let after = mal(summary_stats(&counterfactual_removed(&corpus))).ok_or("no malicious row")?;
    ensure!((before.mean - 3.46).abs() < 0.005, "observed mean {}", before.mean);
    ensure!((after.mean - -1.40).abs() < 0.01, "corrected mean {}", after.mean);
    ensure!(after.mean < 0.0 && before.mean > 0.0, "correction direction");
    Ok(())
}

const NAMED_CASES: [(&str, &str); 11] = [
    ("foo-helper", "pypa/sampleproject"),
    ("bar-toolkit", "pypa/sampleproject"),
    ("quick-deploy-utils", "pypa/sampleproject"),
    ("discordbotpresence", "CorwinDev/Discord-Bot"),
    ("discordbotstatus", "encode/httpx"),
    ("fake-usreagent", "fake-useragent/fake-useragent"),
    ("frexco-pip-requests", "psf/requests"),
    ("python-bitget-api", "cuongitl/python-bitget"),
    ("python-bitget-connect", "cuongitl/python-bitget"),
    ("python-bitget-request", "cuongitl/python-bitget"),
    ("python-bitget-wrapper", "cuongitl/python-bitget"),
];

fn confusion_mini_corpus() -> Result<(), String> {
    let dir = fixtures().join("confusion");
    let corpus = load_corpus(dir.join("cases.lines"), now()).map_err(|e| e.to_string())?;
    let registry = RepoRegistry::load(dir.join("registry.lines")).map_err(|e| e.to_string())?;
    let records = verdict_records(&corpus, &registry);
    for (name, victim) in NAMED_CASES {
        let r = records.iter().find(|r| r.name == name).ok_or(format!("{name} missing"))?;
        ensure!(r.verdict.is_confused(), "{name} is {:?}", r.verdict.verdict);
        ensure!(r.victim_repo().as_deref() == Some(victim), "{name} victim {:?}", r.victim_repo());
    }
    let benign: Vec<_> = corpus.entries.iter().filter(|e| e.label.verdict == Verdict::Benign).collect();
    ensure!(benign.len() == 20, "{} benign pairs", benign.len());
    for e in benign {
        let v = classify_repo_claim(&e.package, e.repo.as_ref(), &registry);
        ensure!(!matches!(v.verdict, Claim::Confused { .. }), "{} confused", e.package.normalized_name);
    }
    let p = confusion_prevalence(&corpus, &registry);
    for (repo, n) in [
        ("pypa/sampleproject", 3),
        ("cuongitl/python-bitget", 4),
        ("CorwinDev/Discord-Bot", 1),
        ("encode/httpx", 1),
        ("fake-useragent/fake-useragent", 1),
        ("psf/requests", 1),
    ] {
        ensure!(p.count_for(repo) == n, "{repo}: {} != {n}", p.count_for(repo));
    }
    ensure!(p.total == 11, "prevalence total {}", p.total);
    Ok(())
}

fn victim() -> RepoSnapshot {
    let mut v = RepoSnapshot::from_url("https://github.com/pypa/sampleproject", now()).unwrap();
    v.stars = 5000;
    v.contributors_count = 50;
    v.has_readme = true;
    v
}

fn evasion_quantification() -> Result<(), String> {
    let sim = Simulator::new(now());
    let mut minimal = PackageSnapshot::new("minimal", now()).unwrap();
    minimal.releases = vec![Release::new("0.0.1", now() - chrono::Duration::days(1))];
    let (_, _, step) = sim.apply(&minimal, None, &Technique::UrlConfusion { victim: victim() });
    ensure!((step.score_before, step.score_after) == (2, 9), "url confusion {} -> {}", step.score_before, step.score_after);
    let stack = Technique::full_stack(victim(), Budgets::default());
    let (_, _, report) = sim.plan(&minimal, None, &stack);
    ensure!(report.final_score == 19, "full stack reaches {}", report.final_score);

    for (pkg, repo) in sample(arb_package_with_repo(now()), 500) {
        let (_, _, report) = sim.plan(&pkg, repo.as_ref(), &stack);
        ensure!(report.steps.iter().all(|s| s.delta >= 0), "{}: negative step", pkg.normalized_name);
        ensure!(report.final_score >= 15, "{} ends at {}", pkg.normalized_name, report.final_score);
    }
    Ok(())
}

fn arb_semver() -> impl Strategy<Value = String> {
    let ident = prop_oneof![(0u64..30).prop_map(|n| n.to_string()), "[a-z][a-z0-9-]{0,4}", "[0-9][a-z-][a-z0-9]{0,2}"];
    (0u64..4, 0u64..4, 0u64..4, prop::collection::vec(ident, 0..3), prop::option::of("[a-z0-9]{1,4}")).prop_map(
        |(a, b, c, pre, build)| {
            let mut s = format!("{a}.{b}.{c}");
            if !pre.is_empty() {
                s = format!("{s}-{}", pre.join("."));
            }
            if let Some(build) = build {
                s = format!("{s}+{build}");
            }
            s
        },
    )
}

fn version_grammar() -> Result<(), String> {
    let mut reader = csv::Reader::from_path(fixtures().join("version/vectors.csv")).map_err(|e| e.to_string())?;
    let mut n = 0;
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let got = parse_semver(&row[0]);
        match (&row[1], got) {
            ("valid", Ok(v)) => {
                let core = (row[2].parse().unwrap(), row[3].parse().unwrap(), row[4].parse().unwrap());
                ensure!(v.core() == core && v.to_string() == row[0], "{:?} parsed as {v}", &row[0]);
            }
            ("invalid", Err(e)) => ensure!(e.reason.code() == &row[7], "{:?} rejected as {}", &row[0], e.reason.code()),
            (want, got) => return Err(format!("{:?}: expected {want}, got {got:?}", &row[0])),
        }
        n += 1;
    }
    ensure!(n >= 30, "only {n} vectors");

    let triples = sample((arb_semver(), arb_semver(), arb_semver()), 10_000);
    for (a, b, c) in &triples {
        let (va, vb, vc) = (parse_semver(a).unwrap(), parse_semver(b).unwrap(), parse_semver(c).unwrap());
        let (ab, bc, ac) = (compare(&va, &vb), compare(&vb, &vc), compare(&va, &vc));
        ensure!(compare(&vb, &va) == ab.reverse(), "antisymmetry {a} {b}");
        ensure!(compare(&va, &va) == Ordering::Equal, "reflexivity {a}");
        if ab != Ordering::Greater && bc != Ordering::Greater {
            ensure!(ac != Ordering::Greater, "transitivity {a} {b} {c}");
        }
        let reference = |x: &str| semver::Version::parse(x).unwrap();
        let (ra, rb) = (reference(a), reference(b));
        let want = (ra.major, ra.minor, ra.patch, &ra.pre).cmp(&(rb.major, rb.minor, rb.patch, &rb.pre));
        ensure!(ab == want, "{a} vs {b}: {ab:?} != {want:?}");
        ensure!(va.to_string() == *a && parse_semver(&va.to_string()).as_ref() == Ok(&va), "round trip {a}");
    }
    Ok(())
}

fn ingest_fixtures() -> Result<(), String> {
    let net = Arc::new(CountingTransport::new(NoNetwork));
    let fetcher = Fetcher::new(FetchPolicy::offline(fixtures().join("pipeline/recorded")), net.clone());
    let feed = fetch_feed(FeedKind::NewPackages, now() - chrono::Duration::days(30), &fetcher)
        .map_err(|e| e.to_string())?;
    ensure!(feed.len() == 8, "feed has {} entries", feed.len());
    ensure!(feed.iter().any(|e| e.name == "tiny-tabulate"), "title fallback lost tiny-tabulate");

    let pkg = fetch_package_metadata("python-bitget-api", &fetcher, now()).map_err(|e| e.to_string())?;
    ensure!(pkg.repo_url.as_deref() == Some("https://github.com/cuongitl/python-bitget"), "repo url {:?}", pkg.repo_url);
    let deploy = fetch_package_metadata("quick-deploy-utils", &fetcher, now()).map_err(|e| e.to_string())?;
    ensure!(deploy.releases.len() == 1, "yanked release kept");
    let repo = fetch_repo_metadata("https://github.com/psf/requests", &fetcher, now()).map_err(|e| e.to_string())?;
    ensure!(
        (repo.stars, repo.contributors_count, repo.tags.len()) == (52000, 640, 2),
        "repo fields ({}, {}, {})",
        repo.stars,
        repo.contributors_count,
        repo.tags.len()
    );

    let osv = load_osv_labels(fixtures().join("pipeline/osv"), "PyPI").map_err(|e| e.to_string())?;
    ensure!(
        (osv.labels.len(), osv.records.len(), osv.skipped) == (6, 7, 1),
        "advisories ({}, {}, {})",
        osv.labels.len(),
        osv.records.len(),
        osv.skipped
    );
    ensure!(net.calls() == 0, "{} direct network calls", net.calls());

    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = common::run_pipeline(work.path());
    ensure!(run.network_calls == 0, "pipeline made {} network calls", run.network_calls);
    Ok(())
}

fn end_to_end() -> Result<(), String> {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = common::run_pipeline(work.path());
    ensure!(run.elapsed < Duration::from_secs(120), "pipeline took {:?}", run.elapsed);
    let diffs = common::compare_goldens(work.path());
    ensure!(diffs.is_empty(), "outputs differ from golden: {diffs:?}");
    Ok(())
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("golden scoring parity", golden_scoring),
        ("log bucket exactness and monotonicity", log_bucket_exactness),
        ("removal delta", removal_delta),
        ("sweep oracle equivalence", sweep_oracle_equivalence),
        ("counterfactual identity", counterfactual_identity),
        ("url confusion mini-corpus", confusion_mini_corpus),
        ("evasion quantification", evasion_quantification),
        ("version grammar", version_grammar),
        ("ingest fixtures offline", ingest_fixtures),
        ("end-to-end pipeline goldens", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(result) => result,
            Err(payload) => Err(payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match outcome {
            Ok(()) => println!("criterion {}: PASS ({name})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL ({name}): {why}", i + 1);
            }
        }
    }
    let _ = panic::take_hook();
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
