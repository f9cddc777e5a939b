use rankguard_core::evasion::{Budgets, Simulator, Technique};
use rankguard_core::model::{parse_timestamp, PackageSnapshot, Release, RepoSnapshot, Timestamp};
use rankguard_core::score::{log_bucket, score_breakdown, ScalingRule};
use rankguard_core::testkit::{arb_package_with_repo, sample};

fn now() -> Timestamp {
    parse_timestamp("2024-12-01T00:00:00Z").unwrap()
}

fn victim() -> RepoSnapshot {
    let mut v = RepoSnapshot::from_url("https://github.com/pypa/sampleproject", now()).unwrap();
    v.stars = 5000;
    v.contributors_count = 50;
    v.has_readme = true;
    v
}

fn minimal() -> PackageSnapshot {
    let mut p = PackageSnapshot::new("minimal", now()).unwrap();
    p.releases = vec![Release::new("0.0.1", now() - chrono::Duration::days(1))];
    p
}

fn single_techniques() -> Vec<Technique> {
    let mut all = Technique::full_stack(victim(), Budgets::default());
    all.push(Technique::NewRepo {
        stars: 200,
        contributors: 10,
        readme: true,
    });
    all
}

#[test]
fn url_confusion_takes_minimal_package_from_two_to_nine() {
    let sim = Simulator::new(now());
    let (_, _, step) = sim.apply(&minimal(), None, &Technique::UrlConfusion { victim: victim() });
    assert_eq!((step.score_before, step.score_after, step.delta), (2, 9, 7));
    assert!(step.applied);
}

#[test]
fn full_stack_reaches_nineteen_from_minimal() {
    let (_, _, report) = Simulator::new(now()).plan(&minimal(), None, &Technique::full_stack(victim(), Budgets::default()));
    assert_eq!(report.initial_score, 2);
    assert_eq!(report.final_score, 19);
}

#[test]
fn random_packages_only_ever_gain() {
    let sim = Simulator::new(now());
    let cases = sample(arb_package_with_repo(now()), 500);
    let techniques = single_techniques();
    for (pkg, repo) in &cases {
        let base = sim.score(pkg, repo.as_ref());
        let mut best_single = base;
        for t in &techniques {
            let (p, r, step) = sim.apply(pkg, repo.as_ref(), t);
            assert!(step.delta >= 0, "{t} on {}", pkg.normalized_name);
            assert_eq!(step.score_before, base);
            assert_eq!(sim.score(&p, r.as_ref()), step.score_after);
            best_single = best_single.max(step.score_after);
        }

        let (p, r, report) = sim.plan(pkg, repo.as_ref(), &Technique::full_stack(victim(), Budgets::default()));
        assert!(report.steps.iter().all(|s| s.delta >= 0));
        assert!(report.final_score >= report.initial_score);
        assert_eq!(report.final_score, sim.score(&p, r.as_ref()));
        assert!(report.final_score >= best_single, "{}: {} < {best_single}", pkg.normalized_name, report.final_score);
        assert!(report.final_score >= 15, "{} ends at {}", pkg.normalized_name, report.final_score);
    }
}

#[test]
fn boolean_techniques_are_idempotent() {
    let sim = Simulator::new(now());
    for (pkg, repo) in sample(arb_package_with_repo(now()), 300) {
        for t in [
            Technique::AddReadme,
            Technique::AvoidPreReleases,
            Technique::VersionGE1,
            Technique::AvoidRemoval,
        ] {
            let (p, r, _) = sim.apply(&pkg, repo.as_ref(), &t);
            let (_, _, again) = sim.apply(&p, r.as_ref(), &t);
            assert_eq!(again.delta, 0, "{t} twice on {}", pkg.normalized_name);
        }
    }
}

#[test]
fn confused_packages_inherit_victim_popularity() {
    let sim = Simulator::new(now());
    let mut applied = 0;
    for (pkg, repo) in sample(arb_package_with_repo(now()), 300) {
        let mut v = victim();
        v.stars = 1 + pkg.subscribers_count * 7 % 90_000;
        v.contributors_count = 1 + pkg.dependents_count % 700;
        let (p, r, step) = sim.apply(&pkg, repo.as_ref(), &Technique::UrlConfusion { victim: v.clone() });
        if !step.applied {
            continue;
        }
        applied += 1;
        let b = score_breakdown(&p, r.as_ref(), now());
        assert_eq!(b.stars, log_bucket(v.stars, ScalingRule::SINGLE));
        assert_eq!(b.contributors, log_bucket(v.contributors_count, ScalingRule::HALF));
        assert_eq!(p.repo_url.as_deref(), Some(v.url.as_str()));
    }
    assert!(applied > 100);
}
