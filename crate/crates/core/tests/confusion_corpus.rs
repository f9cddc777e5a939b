use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use rankguard_core::confusion::{classify_repo_claim, name_relation, RelationKind, RepoRegistry, Verdict as Claim};
use rankguard_core::eval::{confusion_prevalence, verdict_records};
use rankguard_core::model::{load_corpus, parse_timestamp, LabeledCorpus, PackageName, Timestamp, Verdict};
use rankguard_core::testkit::arb_package_with_repo;

fn now() -> Timestamp {
    parse_timestamp("2024-12-01T00:00:00Z").unwrap()
}

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/confusion")
}

fn fixtures() -> (LabeledCorpus, RepoRegistry) {
    (
        load_corpus(dir().join("cases.lines"), now()).unwrap(),
        RepoRegistry::load(dir().join("registry.lines")).unwrap(),
    )
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

#[test]
fn named_malicious_cases_are_confused_with_their_victims() {
    let (corpus, registry) = fixtures();
    let records: BTreeMap<String, _> = verdict_records(&corpus, &registry)
        .into_iter()
        .map(|r| (r.name.clone(), r))
        .collect();
    assert_eq!(corpus.count(Verdict::Malicious), NAMED_CASES.len());
    for (name, victim) in NAMED_CASES {
        let r = &records[name];
        assert_eq!(r.label, Verdict::Malicious);
        assert!(r.verdict.is_confused(), "{name}: {:?}", r.verdict);
        assert_eq!(r.victim_repo().as_deref(), Some(victim), "{name}");
    }
}

#[test]
fn canonical_benign_pairs_are_never_confused() {
    let (corpus, registry) = fixtures();
    let benign: Vec<_> = corpus.entries.iter().filter(|e| e.label.verdict == Verdict::Benign).collect();
    assert_eq!(benign.len(), 20);
    for e in benign {
        let v = classify_repo_claim(&e.package, e.repo.as_ref(), &registry);
        assert_eq!(v.verdict, Claim::Verified, "{}: {:?}", e.package.normalized_name, v.evidence);
    }
}

#[test]
fn prevalence_rows_match_named_counts() {
    let (corpus, registry) = fixtures();
    let p = confusion_prevalence(&corpus, &registry);
    for (repo, count) in [
        ("pypa/sampleproject", 3),
        ("cuongitl/python-bitget", 4),
        ("CorwinDev/Discord-Bot", 1),
        ("encode/httpx", 1),
        ("fake-useragent/fake-useragent", 1),
        ("psf/requests", 1),
    ] {
        assert_eq!(p.count_for(repo), count, "{repo}");
    }
    assert_eq!(p.total, 11);
    assert_eq!(p.total, p.rows.iter().map(|r| r.count).sum::<usize>());
    assert_eq!(p.malicious, 11);
    assert_eq!(p.rows[0].victim_repo, "cuongitl/python-bitget");
}

#[test]
fn mini_corpus_classification_is_deterministic() {
    let (corpus, registry) = fixtures();
    let a = verdict_records(&corpus, &registry);
    let b = verdict_records(&corpus, &registry);
    assert_eq!(a, b);
}

fn registry_strategy() -> impl Strategy<Value = RepoRegistry> {
    proptest::collection::vec(("[a-z]{3,8}", "[a-z]{3,8}(-[a-z]{2,4})?"), 0..6).prop_map(|rows| {
        let mut r = RepoRegistry::new();
        for (owner, pkg) in rows {
            // the generator's claim urls are github.com/{s}/{s}
            let _ = r.insert(&format!("https://github.com/{owner}/{owner}"), &pkg, 100);
        }
        r
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn verdicts_are_justified((pkg, repo) in arb_package_with_repo(now()), registry in registry_strategy()) {
        let v = classify_repo_claim(&pkg, repo.as_ref(), &registry);
        match &v.verdict {
            Claim::Confused { victim } => prop_assert!(!victim.name.is_empty() && !victim.repo.slug().is_empty()),
            Claim::Verified => prop_assert!(v.evidence.iter().any(|e| e.is_positive())),
            Claim::Unverifiable => prop_assert!(!v.evidence.iter().any(|e| e.is_positive())),
        }
        prop_assert_eq!(classify_repo_claim(&pkg, repo.as_ref(), &registry), v);
    }

    #[test]
    fn affix_relations_point_one_way(a in "[a-d]{1,3}(-[a-d]{1,3}){0,3}", b in "[a-d]{1,3}(-[a-d]{1,3}){0,3}") {
        let (a, b) = (PackageName::new(&a).unwrap(), PackageName::new(&b).unwrap());
        let ab = name_relation(&a, &b).kind;
        let ba = name_relation(&b, &a).kind;
        if matches!(ab, RelationKind::PrefixAugmented | RelationKind::SuffixAugmented) {
            prop_assert!(!matches!(ba, RelationKind::PrefixAugmented | RelationKind::SuffixAugmented));
            prop_assert!(a.tokens().len() > b.tokens().len());
        }
        if matches!(ab, RelationKind::Exact | RelationKind::SmallEdit) {
            prop_assert_eq!(ab, ba);
        }
    }
}
