//! Score-inflation techniques applied to package/repository snapshots.
//!
//! Each technique rewrites a copy of the snapshots the way an attacker would
//! manipulate the corresponding metric. A technique whose projected effect
//! on the score is negative is not applied.

use std::fmt;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::model::{PackageSnapshot, PackageStatus, Release, RepoSnapshot, Timestamp};
use crate::score::{is_outdated, score_breakdown_with_index, IndexView};
use crate::version::{compare, parse_semver, release_flags, Version, SIX_MONTHS_DAYS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Technique {
    AddBasicInfo,
    UrlConfusion { victim: RepoSnapshot },
    NewRepo { stars: u64, contributors: u64, readme: bool },
    AddReadme,
    MultipleVersions,
    FollowSemVer,
    RecentRelease,
    AgePackage,
    VersionGE1,
    CreateDependents { n: u64 },
    CreateDependentRepos { n: u64 },
    FakeStars { n: u64 },
    FakeContributors { n: u64 },
    FakeSubscribers { n: u64 },
    AvoidPreReleases,
    UpdateDependencies,
    AvoidRemoval,
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Technique::AddBasicInfo => f.write_str("AddBasicInfo"),
            Technique::UrlConfusion { victim } => write!(f, "UrlConfusion({}/{})", victim.owner, victim.name),
            Technique::NewRepo {
                stars,
                contributors,
                readme,
            } => write!(f, "NewRepo({stars} stars; {contributors} contributors; readme={readme})"),
            Technique::AddReadme => f.write_str("AddReadme"),
            Technique::MultipleVersions => f.write_str("MultipleVersions"),
            Technique::FollowSemVer => f.write_str("FollowSemVer"),
            Technique::RecentRelease => f.write_str("RecentRelease"),
            Technique::AgePackage => f.write_str("AgePackage"),
            Technique::VersionGE1 => f.write_str("VersionGE1"),
            Technique::CreateDependents { n } => write!(f, "CreateDependents({n})"),
            Technique::CreateDependentRepos { n } => write!(f, "CreateDependentRepos({n})"),
            Technique::FakeStars { n } => write!(f, "FakeStars({n})"),
            Technique::FakeContributors { n } => write!(f, "FakeContributors({n})"),
            Technique::FakeSubscribers { n } => write!(f, "FakeSubscribers({n})"),
            Technique::AvoidPreReleases => f.write_str("AvoidPreReleases"),
            Technique::UpdateDependencies => f.write_str("UpdateDependencies"),
            Technique::AvoidRemoval => f.write_str("AvoidRemoval"),
        }
    }
}

/// Attacker budgets for the count-based techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub dependents: u64,
    pub dependent_repos: u64,
    pub stars: u64,
    pub contributors: u64,
    pub subscribers: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            dependents: 100,
            dependent_repos: 10,
            stars: 5000,
            contributors: 50,
            subscribers: 10,
        }
    }
}

impl Technique {
    /// Every technique, ordered so that later steps do not undo earlier ones.
    pub fn full_stack(victim: RepoSnapshot, budgets: Budgets) -> Vec<Technique> {
        vec![
            Technique::AvoidRemoval,
            Technique::AddBasicInfo,
            Technique::UrlConfusion { victim },
            Technique::AddReadme,
            Technique::FollowSemVer,
            Technique::AvoidPreReleases,
            Technique::MultipleVersions,
            Technique::VersionGE1,
            Technique::RecentRelease,
            Technique::AgePackage,
            Technique::CreateDependents { n: budgets.dependents },
            Technique::CreateDependentRepos {
                n: budgets.dependent_repos,
            },
            Technique::FakeStars { n: budgets.stars },
            Technique::FakeContributors {
                n: budgets.contributors,
            },
            Technique::FakeSubscribers {
                n: budgets.subscribers,
            },
            Technique::UpdateDependencies,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvasionStep {
    pub technique: Technique,
    pub score_before: i64,
    pub score_after: i64,
    pub delta: i64,
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvasionReport {
    pub steps: Vec<EvasionStep>,
    pub initial_score: i64,
    pub final_score: i64,
}

impl EvasionReport {
    /// CSV with columns technique, before, after, delta, applied.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["technique", "before", "after", "delta", "applied"])
            .expect("in-memory csv");
        for s in &self.steps {
            w.write_record([
                s.technique.to_string(),
                s.score_before.to_string(),
                s.score_after.to_string(),
                s.delta.to_string(),
                s.applied.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

/// Applies techniques at a fixed evaluation time, optionally against an
/// index view so that dependency updates can be simulated.
#[derive(Debug, Clone)]
pub struct Simulator {
    now: Timestamp,
    index: Option<IndexView>,
}

fn max_semver(releases: &[Release]) -> Option<Version> {
    releases
        .iter()
        .filter_map(|r| parse_semver(&r.version_text).ok())
        .max_by(compare)
}

fn next_patch(releases: &[Release]) -> Version {
    match max_semver(releases) {
        Some(v) => Version::new(v.major, v.minor, v.patch.saturating_add(1)),
        None => Version::new(0, 1, 0),
    }
}

/// Best-effort SemVer rendering of an arbitrary version string.
fn coerce_semver(text: &str) -> Option<Version> {
    let nums: Vec<u64> = text
        .split(|c: char| !c.is_ascii_digit())
        .filter(|p| !p.is_empty())
        .take(3)
        .map(|p| p.parse().unwrap_or(u64::MAX))
        .collect();
    if nums.is_empty() {
        return None;
    }
    let part = |i: usize| nums.get(i).copied().unwrap_or(0);
    Some(Version::new(part(0), part(1), part(2)))
}

impl Simulator {
    pub fn new(now: Timestamp) -> Self {
        Self { now, index: None }
    }

    pub fn with_index(mut self, index: IndexView) -> Self {
        self.index = Some(index);
        self
    }

    pub fn score(&self, pkg: &PackageSnapshot, repo: Option<&RepoSnapshot>) -> i64 {
        score_breakdown_with_index(pkg, repo, self.now, self.index.as_ref()).total
    }

    /// Time stamp for a release that should not change recency: alongside
    /// the latest existing release, or now when there is none.
    fn quiet_release_time(&self, pkg: &PackageSnapshot) -> Timestamp {
        pkg.latest_release().map_or(self.now, |r| r.published_at)
    }

    fn push_release(&self, pkg: &mut PackageSnapshot, version: &Version, at: Timestamp) {
        pkg.releases.push(Release::new(version.to_string(), at));
        pkg.releases.sort_by_key(|r| r.published_at);
        if pkg.captured_at < at {
            pkg.captured_at = at;
        }
    }

    /// Rewrites copies of the snapshots according to `technique`. Returns
    /// `None` when the technique has nothing to act on.
    fn mutate(
        &self,
        pkg: &PackageSnapshot,
        repo: Option<&RepoSnapshot>,
        technique: &Technique,
    ) -> Option<(PackageSnapshot, Option<RepoSnapshot>)> {
        let mut p = pkg.clone();
        let mut r = repo.cloned();
        match technique {
            Technique::AddBasicInfo => {
                if p.description.as_deref().is_none_or(|d| d.trim().is_empty()) {
                    p.description = Some(format!("Fast, simple and reliable {} toolkit", p.name));
                }
                if p.keywords.iter().all(|k| k.trim().is_empty()) {
                    p.keywords = vec!["python".into(), "utility".into(), "api".into()];
                }
                let has_url = [&p.homepage_url, &p.repo_url]
                    .iter()
                    .any(|u| u.as_deref().is_some_and(|u| !u.trim().is_empty()));
                if !has_url {
                    p.homepage_url = Some(format!("https://{}.example.org", p.normalized_name));
                }
            }
            Technique::UrlConfusion { victim } => {
                p.repo_url = Some(victim.url.clone());
                r = Some(victim.clone());
            }
            Technique::NewRepo {
                stars,
                contributors,
                readme,
            } => {
                let url = format!("https://github.com/{0}-dev/{0}", p.normalized_name);
                let mut fresh = RepoSnapshot::from_url(&url, self.now).expect("well-formed url");
                fresh.stars = *stars;
                fresh.contributors_count = *contributors;
                fresh.has_readme = *readme;
                fresh.manifest_package_names = vec![p.name.clone()];
                p.repo_url = Some(fresh.url.clone());
                r = Some(fresh);
            }
            Technique::AddReadme => r.as_mut()?.has_readme = true,
            Technique::MultipleVersions => {
                let at = self.quiet_release_time(&p);
                let v = next_patch(&p.releases);
                self.push_release(&mut p, &v, at);
            }
            Technique::RecentRelease => {
                let v = next_patch(&p.releases);
                let at = self.now.max(self.quiet_release_time(&p));
                self.push_release(&mut p, &v, at);
            }
            Technique::FollowSemVer => {
                let mut previous: Option<Version> = None;
                for rel in &mut p.releases {
                    let v = match parse_semver(&rel.version_text) {
                        Ok(v) => v,
                        Err(_) => {
                            let mut v = coerce_semver(&rel.version_text).unwrap_or(Version::new(0, 0, 1));
                            if let Some(prev) = &previous {
                                if compare(&v, prev).is_le() {
                                    v = Version::new(prev.major, prev.minor, prev.patch.saturating_add(1));
                                }
                            }
                            *rel = Release::new(v.to_string(), rel.published_at);
                            v
                        }
                    };
                    previous = Some(v);
                }
            }
            Technique::AgePackage => {
                let target = self.now - Duration::days(SIX_MONTHS_DAYS + 1);
                match p.releases.first_mut() {
                    Some(first) if first.published_at > target => first.published_at = target,
                    Some(_) => {}
                    None => self.push_release(&mut p, &Version::new(0, 1, 0), target),
                }
                p.releases.sort_by_key(|r| r.published_at);
            }
            Technique::VersionGE1 => {
                if release_flags(&p.releases, self.now).ge_1_0_0 {
                    return Some((p, r));
                }
                let v = match max_semver(&p.releases) {
                    Some(max) if max.major >= 1 => Version::new(max.major, max.minor, max.patch),
                    _ => Version::new(1, 0, 0),
                };
                let at = self.quiet_release_time(&p);
                self.push_release(&mut p, &v, at);
            }
            Technique::CreateDependents { n } => p.dependents_count = p.dependents_count.max(*n),
            Technique::CreateDependentRepos { n } => {
                p.dependent_repos_count = p.dependent_repos_count.max(*n)
            }
            Technique::FakeStars { n } => {
                let repo = r.as_mut()?;
                repo.stars = repo.stars.max(*n);
            }
            Technique::FakeContributors { n } => {
                let repo = r.as_mut()?;
                repo.contributors_count = repo.contributors_count.max(*n);
            }
            Technique::FakeSubscribers { n } => p.subscribers_count = p.subscribers_count.max(*n),
            Technique::AvoidPreReleases => {
                if !release_flags(&p.releases, self.now).all_prereleases {
                    return Some((p, r));
                }
                // publish the same history as stable versions
                let mut previous: Option<Version> = None;
                for rel in &mut p.releases {
                    let parsed = parse_semver(&rel.version_text).ok()?;
                    let mut v = Version::new(parsed.major, parsed.minor, parsed.patch);
                    if let Some(prev) = &previous {
                        if compare(&v, prev).is_le() {
                            v = Version::new(prev.major, prev.minor, prev.patch.saturating_add(1));
                        }
                    }
                    *rel = Release::new(v.to_string(), rel.published_at);
                    previous = Some(v);
                }
            }
            Technique::UpdateDependencies => {
                let index = self.index.as_ref()?;
                for dep in &mut p.dependencies {
                    if is_outdated(dep, index) {
                        let latest = index.latest(&dep.name).expect("outdated implies indexed");
                        dep.constraint = format!(">={latest}");
                    }
                }
            }
            Technique::AvoidRemoval => p.status = PackageStatus::Active,
        }
        Some((p, r))
    }

    pub fn apply(
        &self,
        pkg: &PackageSnapshot,
        repo: Option<&RepoSnapshot>,
        technique: &Technique,
    ) -> (PackageSnapshot, Option<RepoSnapshot>, EvasionStep) {
        let before = self.score(pkg, repo);
        let unchanged = |applied_to: &Technique| {
            (
                pkg.clone(),
                repo.cloned(),
                EvasionStep {
                    technique: applied_to.clone(),
                    score_before: before,
                    score_after: before,
                    delta: 0,
                    applied: false,
                },
            )
        };
        let Some((p, r)) = self.mutate(pkg, repo, technique) else {
            return unchanged(technique);
        };
        if &p == pkg && r.as_ref() == repo {
            return unchanged(technique);
        }
        let after = self.score(&p, r.as_ref());
        if after < before {
            return unchanged(technique);
        }
        let step = EvasionStep {
            technique: technique.clone(),
            score_before: before,
            score_after: after,
            delta: after - before,
            applied: true,
        };
        (p, r, step)
    }

    /// Applies `techniques` greedily in order.
    pub fn plan(
        &self,
        pkg: &PackageSnapshot,
        repo: Option<&RepoSnapshot>,
        techniques: &[Technique],
    ) -> (PackageSnapshot, Option<RepoSnapshot>, EvasionReport) {
        let initial_score = self.score(pkg, repo);
        let mut p = pkg.clone();
        let mut r = repo.cloned();
        let mut steps = Vec::with_capacity(techniques.len());
        for t in techniques {
            let (np, nr, step) = self.apply(&p, r.as_ref(), t);
            p = np;
            r = nr;
            steps.push(step);
        }
        let final_score = initial_score + steps.iter().map(|s| s.delta).sum::<i64>();
        let report = EvasionReport {
            steps,
            initial_score,
            final_score,
        };
        (p, r, report)
    }
}

pub fn apply_technique(
    pkg: &PackageSnapshot,
    repo: Option<&RepoSnapshot>,
    technique: &Technique,
    now: Timestamp,
) -> (PackageSnapshot, Option<RepoSnapshot>, EvasionStep) {
    Simulator::new(now).apply(pkg, repo, technique)
}

pub fn plan_max_inflation(
    pkg: &PackageSnapshot,
    repo: Option<&RepoSnapshot>,
    techniques: &[Technique],
    now: Timestamp,
) -> EvasionReport {
    Simulator::new(now).plan(pkg, repo, techniques).2
}
