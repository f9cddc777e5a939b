//! The 18-metric trust score.
//!
//! Every metric contributes an integer; the score is their plain sum with no
//! cap. Count-derived metrics are `round(log10(count) * multiplier)` with
//! round-half-away-from-zero, and a zero count contributes nothing.

mod outdated;

use serde::{Deserialize, Serialize};

use crate::model::{PackageSnapshot, PackageStatus, RepoSnapshot, Timestamp};
use crate::version::release_flags;

pub use outdated::{constraint_excludes, is_outdated, IndexView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multiplier {
    Double,
    Single,
    Half,
}

impl Multiplier {
    pub fn factor(self) -> f64 {
        match self {
            Multiplier::Double => 2.0,
            Multiplier::Single => 1.0,
            Multiplier::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    HalfAwayFromZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScalingRule {
    pub multiplier: Multiplier,
    pub rounding: Rounding,
}

impl ScalingRule {
    pub const DOUBLE: Self = Self::with(Multiplier::Double);
    pub const SINGLE: Self = Self::with(Multiplier::Single);
    pub const HALF: Self = Self::with(Multiplier::Half);

    pub const fn with(multiplier: Multiplier) -> Self {
        Self {
            multiplier,
            rounding: Rounding::HalfAwayFromZero,
        }
    }
}

pub fn log_bucket(count: u64, rule: ScalingRule) -> i64 {
    if count == 0 {
        return 0;
    }
    let scaled = (count as f64).log10() * rule.multiplier.factor();
    match rule.rounding {
        // f64::round rounds half away from zero
        Rounding::HalfAwayFromZero => scaled.round() as i64,
    }
}

/// Metric names in canonical order. These double as CSV column headers.
pub const METRIC_NAMES: [&str; 18] = [
    "basic_info_present",
    "source_repository_present",
    "readme_present",
    "has_multiple_versions",
    "follows_semver",
    "recent_release",
    "not_brand_new",
    "ge_1_0_0",
    "dependent_packages",
    "dependent_repositories",
    "stars",
    "contributors",
    "subscribers",
    "all_prereleases",
    "any_outdated_dependencies",
    "is_deprecated",
    "is_unmaintained",
    "is_removed",
];

pub const STATUS_PENALTY: i64 = -5;

/// Per-metric contributions and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MetricBreakdown {
    pub basic_info_present: i64,
    pub source_repository_present: i64,
    pub readme_present: i64,
    pub has_multiple_versions: i64,
    pub follows_semver: i64,
    pub recent_release: i64,
    pub not_brand_new: i64,
    pub ge_1_0_0: i64,
    pub dependent_packages: i64,
    pub dependent_repositories: i64,
    pub stars: i64,
    pub contributors: i64,
    pub subscribers: i64,
    pub all_prereleases: i64,
    pub any_outdated_dependencies: i64,
    pub is_deprecated: i64,
    pub is_unmaintained: i64,
    pub is_removed: i64,
    pub total: i64,
}

impl MetricBreakdown {
    /// Contributions in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [i64; 18] {
        [
            self.basic_info_present,
            self.source_repository_present,
            self.readme_present,
            self.has_multiple_versions,
            self.follows_semver,
            self.recent_release,
            self.not_brand_new,
            self.ge_1_0_0,
            self.dependent_packages,
            self.dependent_repositories,
            self.stars,
            self.contributors,
            self.subscribers,
            self.all_prereleases,
            self.any_outdated_dependencies,
            self.is_deprecated,
            self.is_unmaintained,
            self.is_removed,
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, i64)> {
        METRIC_NAMES.into_iter().zip(self.values())
    }

    pub fn get(&self, metric: &str) -> Option<i64> {
        self.iter().find(|(n, _)| *n == metric).map(|(_, v)| v)
    }

    /// Recomputes `total` from the contributions.
    pub fn with_total(mut self) -> Self {
        self.total = total(&self);
        self
    }
}

/// Sum of the 18 contributions.
pub fn total(breakdown: &MetricBreakdown) -> i64 {
    breakdown.values().iter().sum()
}

fn flag(b: bool) -> i64 {
    i64::from(b)
}

fn non_blank(s: &Option<String>) -> bool {
    s.as_deref().is_some_and(|s| !s.trim().is_empty())
}

pub fn score_breakdown(
    pkg: &PackageSnapshot,
    repo: Option<&RepoSnapshot>,
    now: Timestamp,
) -> MetricBreakdown {
    score_breakdown_with_index(pkg, repo, now, None)
}

/// Scores `pkg` as of `now`. The outdated-dependency metric is only
/// evaluated when an index view is supplied.
pub fn score_breakdown_with_index(
    pkg: &PackageSnapshot,
    repo: Option<&RepoSnapshot>,
    now: Timestamp,
    index: Option<&IndexView>,
) -> MetricBreakdown {
    let flags = release_flags(&pkg.releases, now);
    let has_repo_url = non_blank(&pkg.repo_url);
    let basic_info = non_blank(&pkg.description)
        && (non_blank(&pkg.homepage_url) || has_repo_url)
        && pkg.keywords.iter().any(|k| !k.trim().is_empty());
    let outdated = index.is_some_and(|index| pkg.dependencies.iter().any(|d| is_outdated(d, index)));
    let penalty = |status| if pkg.status == status { STATUS_PENALTY } else { 0 };

    MetricBreakdown {
        basic_info_present: flag(basic_info),
        source_repository_present: flag(has_repo_url),
        readme_present: flag(repo.is_some_and(|r| r.has_readme)),
        has_multiple_versions: flag(flags.has_multiple_versions),
        follows_semver: flag(flags.follows_semver),
        recent_release: flag(flags.recent_release),
        not_brand_new: flag(flags.not_brand_new),
        ge_1_0_0: flag(flags.ge_1_0_0),
        dependent_packages: log_bucket(pkg.dependents_count, ScalingRule::DOUBLE),
        dependent_repositories: log_bucket(pkg.dependent_repos_count, ScalingRule::SINGLE),
        stars: repo.map_or(0, |r| log_bucket(r.stars, ScalingRule::SINGLE)),
        contributors: repo.map_or(0, |r| log_bucket(r.contributors_count, ScalingRule::HALF)),
        subscribers: log_bucket(pkg.subscribers_count, ScalingRule::HALF),
        all_prereleases: -flag(flags.all_prereleases),
        any_outdated_dependencies: -flag(outdated),
        is_deprecated: penalty(PackageStatus::Deprecated),
        is_unmaintained: penalty(PackageStatus::Unmaintained),
        is_removed: penalty(PackageStatus::Removed),
        total: 0,
    }
    .with_total()
}
