//! Random package, repository and corpus generators.

use std::collections::BTreeSet;

use chrono::Duration;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

use crate::model::{
    CorpusEntry, Dependency, Label, LabelSource, LabeledCorpus, PackageName, PackageSnapshot, PackageStatus, Release,
    RepoSnapshot, SnapshotRecord, Tag, Timestamp, Verdict,
};

/// Raw names with mixed case and separators.
pub fn arb_raw_name() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9]{1,7}([-_.][a-zA-Z0-9]{1,6}){0,2}"
}

/// Counts skewed towards small values but reaching 10^6.
pub fn arb_count() -> impl Strategy<Value = u64> {
    prop_oneof![Just(0u64), 0u64..10, 0u64..1_000, 0u64..=1_000_000]
}

/// Valid SemVer strings, calendar versions and PEP 440 forms.
pub fn arb_version_text() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => (0u64..4, 0u64..12, 0u64..20).prop_map(|(a, b, c)| format!("{a}.{b}.{c}")),
        1 => (0u64..3, 0u64..5, "(alpha|beta|rc)", 0u64..4)
            .prop_map(|(a, b, tag, n)| format!("{a}.{b}.0-{tag}.{n}")),
        1 => (2019u64..2025, 1u64..13).prop_map(|(y, m)| format!("{y}.{m}")),
        1 => (0u64..3, 0u64..9, 1u64..4).prop_map(|(a, b, n)| format!("{a}.{b}a{n}")),
    ]
}

pub fn arb_status() -> impl Strategy<Value = PackageStatus> {
    prop_oneof![
        6 => Just(PackageStatus::Active),
        1 => Just(PackageStatus::Deprecated),
        1 => Just(PackageStatus::Unmaintained),
        1 => Just(PackageStatus::Removed),
    ]
}

/// Up to `max` releases published within `span_days` before `now`, sorted.
pub fn arb_releases(now: Timestamp, max: usize, span_days: i64) -> impl Strategy<Value = Vec<Release>> {
    vec((arb_version_text(), 0..span_days * 24), 0..=max).prop_map(move |mut raw| {
        raw.sort_by_key(|(_, hours)| std::cmp::Reverse(*hours));
        raw.into_iter()
            .map(|(v, hours)| Release::new(v, now - Duration::hours(hours)))
            .collect()
    })
}

fn arb_dependency() -> impl Strategy<Value = Dependency> {
    let constraint = prop_oneof![
        Just(String::new()),
        (0u64..3, 0u64..10).prop_map(|(a, b)| format!("=={a}.{b}.0")),
        (1u64..4).prop_map(|a| format!(">={a}.0,<{}.0", a + 1)),
        (0u64..3, 0u64..10).prop_map(|(a, b)| format!("~={a}.{b}")),
    ];
    ("[a-z]{3,8}", constraint).prop_map(|(n, c)| Dependency::new(n, c))
}

pub fn arb_package(now: Timestamp) -> impl Strategy<Value = PackageSnapshot> {
    let text = proptest::option::of("[A-Za-z ]{0,24}");
    let url = proptest::option::of("[a-z]{3,8}".prop_map(|s| format!("https://github.com/{s}/{s}")));
    (
        arb_raw_name(),
        (text, url.clone(), url),
        vec("[a-z]{0,6}", 0..3),
        arb_releases(now, 6, 1000),
        (arb_count(), arb_count(), arb_count()),
        vec(arb_dependency(), 0..3),
        arb_status(),
    )
        .prop_map(
            move |(name, (description, homepage_url, repo_url), keywords, releases, counts, deps, status)| {
                let mut p = PackageSnapshot::new(&name, now).expect("generated names are valid");
                p.description = description;
                p.homepage_url = homepage_url;
                p.repo_url = repo_url;
                p.keywords = keywords;
                p.releases = releases;
                (p.dependents_count, p.dependent_repos_count, p.subscribers_count) = counts;
                p.dependencies = deps;
                p.status = status;
                p
            },
        )
}

pub fn arb_repo(url: String, now: Timestamp) -> impl Strategy<Value = RepoSnapshot> {
    (
        arb_count(),
        arb_count(),
        any::<bool>(),
        vec(("v[0-9]\\.[0-9]", 0i64..20_000), 0..4),
        vec("[a-z]{3,8}", 0..2),
    )
        .prop_map(move |(stars, contributors, readme, tags, manifests)| {
            let mut r = RepoSnapshot::from_url(&url, now).expect("generated urls are valid");
            r.stars = stars;
            r.contributors_count = contributors;
            r.has_readme = readme;
            r.tags = tags
                .into_iter()
                .map(|(n, h)| Tag::new(n, now - Duration::hours(h)))
                .collect();
            r.manifest_package_names = manifests;
            r
        })
}

/// A package plus, when it claims a repository, usually a snapshot of it.
pub fn arb_package_with_repo(now: Timestamp) -> impl Strategy<Value = (PackageSnapshot, Option<RepoSnapshot>)> {
    (arb_package(now), any::<bool>()).prop_flat_map(move |(pkg, with_repo)| match pkg.repo_url.clone() {
        Some(url) if with_repo => arb_repo(url, now)
            .prop_map(move |r| (pkg.clone(), Some(r)))
            .boxed(),
        _ => Just((pkg, None)).boxed(),
    })
}

fn dedupe_by_name(records: Vec<SnapshotRecord>) -> Vec<SnapshotRecord> {
    let mut seen = BTreeSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(r.package.normalized_name.clone()))
        .collect()
}

/// Snapshot records with distinct normalized names.
pub fn arb_snapshot_records(now: Timestamp, max: usize) -> impl Strategy<Value = Vec<SnapshotRecord>> {
    vec(arb_package_with_repo(now), 0..=max).prop_map(|items| {
        dedupe_by_name(
            items
                .into_iter()
                .map(|(package, repo)| SnapshotRecord::new(package, repo))
                .collect(),
        )
    })
}

pub fn arb_corpus(now: Timestamp, max: usize) -> impl Strategy<Value = LabeledCorpus> {
    (arb_snapshot_records(now, max), vec(any::<bool>(), max + 1)).prop_map(move |(records, flags)| {
        let entries = records
            .into_iter()
            .zip(flags)
            .map(|(r, malicious)| {
                let verdict = if malicious { Verdict::Malicious } else { Verdict::Benign };
                let label = Label::new(r.package.normalized_name.clone(), verdict, LabelSource::Synthetic);
                CorpusEntry {
                    package: r.package,
                    repo: r.repo,
                    label,
                }
            })
            .collect();
        LabeledCorpus {
            entries,
            evaluation_time: now,
        }
    })
}

/// Draws `n` values from `strategy` with a fixed seed, for callers that
/// need data rather than a property test.
pub fn sample<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(Config::default(), proptest::test_runner::TestRng::deterministic_rng(
        proptest::test_runner::RngAlgorithm::ChaCha,
    ));
    (0..n)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy yields values").current())
        .collect()
}

/// Normalized name shortcut for fixtures.
pub fn name(raw: &str) -> PackageName {
    PackageName::new(raw).expect("valid package name")
}

/// An active package (and repository, when needed) scoring exactly `target`
/// at `now`, built from plain metadata. Supports 0..=16.
///
/// Panics for targets outside that range.
pub fn package_scoring(name: &str, target: i64, now: Timestamp) -> (PackageSnapshot, Option<RepoSnapshot>) {
    let mut pkg = PackageSnapshot::new(name, now).expect("valid package name");
    let days = |d| now - Duration::days(d);
    match target {
        0 => return (pkg, None),
        1 => {
            pkg.releases = vec![Release::new("2024.1", days(10))];
            return (pkg, None);
        }
        2 => {
            pkg.releases = vec![Release::new("0.0.1", days(1))];
            return (pkg, None);
        }
        _ => pkg.releases = vec![Release::new("1.0.0", days(10))],
    }
    // (count, contribution) choices; the release alone is worth 3
    const DEPENDENTS: [(u64, i64); 3] = [(0, 0), (10, 2), (100, 4)];
    const STARS: [(u64, i64); 4] = [(0, 0), (10, 1), (100, 2), (1000, 3)];
    const FLAG: [(u64, i64); 2] = [(0, 0), (10, 1)];
    let url = format!("https://github.com/{0}/{0}", pkg.normalized_name);
    for (dependents, a) in DEPENDENTS {
        for (repos, b) in FLAG {
            for (subscribers, c) in FLAG {
                for basic in [0, 1] {
                    // 0: no repo url, 1: url only, 2: url plus repository snapshot
                    for repo_mode in [0, 1, 2] {
                        let stars_options: &[(u64, i64)] = if repo_mode == 2 { &STARS } else { &STARS[..1] };
                        let contributor_options: &[(u64, i64)] = if repo_mode == 2 { &FLAG } else { &FLAG[..1] };
                        let readme_options: &[i64] = if repo_mode == 2 { &[0, 1] } else { &[0] };
                        for &(stars, d) in stars_options {
                            for &(contributors, e) in contributor_options {
                                for &readme in readme_options {
                                    let sum = 3 + a + b + c + basic + repo_mode.min(1) + d + e + readme;
                                    if sum != target {
                                        continue;
                                    }
                                    pkg.dependents_count = dependents;
                                    pkg.dependent_repos_count = repos;
                                    pkg.subscribers_count = subscribers;
                                    if basic == 1 {
                                        pkg.description = Some(format!("{name} package"));
                                        pkg.homepage_url = Some(format!("https://{}.example.org", pkg.normalized_name));
                                        pkg.keywords = vec!["tools".into()];
                                    }
                                    let repo = (repo_mode > 0).then(|| {
                                        pkg.repo_url = Some(url.clone());
                                        let mut r = RepoSnapshot::from_url(&url, now).expect("valid url");
                                        r.stars = stars;
                                        r.contributors_count = contributors;
                                        r.has_readme = readme == 1;
                                        r
                                    });
                                    let repo = if repo_mode == 2 { repo } else { None };
                                    return (pkg, repo);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    panic!("no recipe scores {target}");
}

/// A labeled corpus whose entries score exactly as given. The first
/// `removed` malicious scores must be -3; those entries are built as
/// removed packages.
pub fn corpus_with_scores(benign: &[i64], malicious: &[i64], removed: usize, now: Timestamp) -> LabeledCorpus {
    let mut entries = Vec::with_capacity(benign.len() + malicious.len());
    let mut push = |idx: usize, target: i64, verdict: Verdict, remove: bool| {
        let prefix = if verdict == Verdict::Malicious { "mal" } else { "ben" };
        let name = format!("{prefix}-{idx:04}");
        let (mut package, repo) = package_scoring(&name, if remove { target + 5 } else { target }, now);
        if remove {
            package.status = PackageStatus::Removed;
        }
        let label = Label::new(package.normalized_name.clone(), verdict, LabelSource::Synthetic);
        entries.push(CorpusEntry { package, repo, label });
    };
    for (i, &s) in benign.iter().enumerate() {
        push(i, s, Verdict::Benign, false);
    }
    for (i, &s) in malicious.iter().enumerate() {
        let remove = i < removed;
        assert!(!remove || s == -3, "removed entries must score -3");
        push(i, s, Verdict::Malicious, remove);
    }
    LabeledCorpus {
        entries,
        evaluation_time: now,
    }
}
