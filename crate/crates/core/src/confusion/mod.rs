//! Verification of repository claims.
//!
//! A package claims a source repository through its metadata. The claim is
//! checked against a registry of known repository owners, the repository's
//! own packaging manifests, name similarity and release/tag timing. A claim
//! that points at somebody else's repository is reported as confused, naming
//! the impersonated package or repository.

mod distance;
mod registry;
mod repo_url;

use std::fmt;

use chrono::Duration;
use serde::Serialize;

use crate::model::{PackageName, PackageSnapshot, Release, RepoSnapshot, Tag};

pub use crate::model::normalize_name;
pub use distance::damerau_levenshtein;
pub use registry::{RegistryEntry, RegistryError, RegistryRecord, RepoRegistry};
pub use repo_url::RepoId;

pub const CORRELATION_WINDOW_HOURS: i64 = 24;
pub const CORRELATION_MIN_SCORE: f64 = 0.8;
pub const CORRELATION_MIN_MATCHED: usize = 3;
pub const SMALL_EDIT_THRESHOLD: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Exact,
    PrefixAugmented,
    SuffixAugmented,
    SmallEdit,
    Unrelated,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Exact => "exact",
            RelationKind::PrefixAugmented => "prefix_augmented",
            RelationKind::SuffixAugmented => "suffix_augmented",
            RelationKind::SmallEdit => "small_edit",
            RelationKind::Unrelated => "unrelated",
        }
    }

    /// Affix or single-edit resemblance, i.e. the typosquatting patterns.
    pub fn is_lookalike(self) -> bool {
        matches!(
            self,
            RelationKind::PrefixAugmented | RelationKind::SuffixAugmented | RelationKind::SmallEdit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NameRelation {
    pub kind: RelationKind,
    pub edit_distance: usize,
    pub detail: String,
}

fn affix_of(longer: &[&str], shorter: &[&str]) -> Option<RelationKind> {
    if longer.len() <= shorter.len() {
        return None;
    }
    if longer.ends_with(shorter) {
        Some(RelationKind::PrefixAugmented)
    } else if longer.starts_with(shorter) {
        Some(RelationKind::SuffixAugmented)
    } else {
        None
    }
}

/// How `pkg` relates to `target`, both in canonical form.
///
/// Priority is exact, then the affix relations (on hyphen-token boundaries),
/// then a single edit between the separator-stripped forms. A single edit
/// is not reported when one name is a token affix of the other, which keeps
/// the relation symmetric for `small_edit`.
pub fn name_relation(pkg: &PackageName, target: &PackageName) -> NameRelation {
    if pkg == target {
        return NameRelation {
            kind: RelationKind::Exact,
            edit_distance: 0,
            detail: format!("{pkg} equals {target}"),
        };
    }
    let (pt, tt) = (pkg.tokens(), target.tokens());
    let mut distance = damerau_levenshtein(&pkg.stripped(), &target.stripped());
    if distance == 0 {
        // names differ only in separators
        distance = damerau_levenshtein(pkg.as_str(), target.as_str());
    }

    if let Some(kind) = affix_of(&pt, &tt) {
        let extra = if kind == RelationKind::PrefixAugmented {
            pt[..pt.len() - tt.len()].join("-")
        } else {
            pt[tt.len()..].join("-")
        };
        let side = if kind == RelationKind::PrefixAugmented { "leading" } else { "trailing" };
        return NameRelation {
            kind,
            edit_distance: distance,
            detail: format!("{pkg} adds {side} tokens {extra:?} to {target}"),
        };
    }

    if distance == SMALL_EDIT_THRESHOLD && affix_of(&tt, &pt).is_none() {
        return NameRelation {
            kind: RelationKind::SmallEdit,
            edit_distance: distance,
            detail: format!("{pkg} is one edit away from {target}"),
        };
    }

    NameRelation {
        kind: RelationKind::Unrelated,
        edit_distance: distance,
        detail: format!("{pkg} does not resemble {target}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationScore {
    pub matched: usize,
    pub total: usize,
    pub score: f64,
}

impl CorrelationScore {
    pub fn verifies(&self) -> bool {
        self.score >= CORRELATION_MIN_SCORE && self.matched >= CORRELATION_MIN_MATCHED
    }
}

/// Matches releases to repository tags published within 24 hours of each
/// other. Pairs are taken nearest-first and every tag is used at most once.
pub fn correlate_releases(releases: &[Release], tags: &[Tag]) -> CorrelationScore {
    let window = Duration::hours(CORRELATION_WINDOW_HOURS);
    let mut pairs: Vec<(Duration, usize, usize)> = Vec::new();
    for (ri, r) in releases.iter().enumerate() {
        for (ti, t) in tags.iter().enumerate() {
            let gap = (r.published_at - t.created_at).abs();
            if gap <= window {
                pairs.push((gap, ri, ti));
            }
        }
    }
    pairs.sort();

    let mut release_used = vec![false; releases.len()];
    let mut tag_used = vec![false; tags.len()];
    let mut matched = 0;
    for (_, ri, ti) in pairs {
        if !release_used[ri] && !tag_used[ti] {
            release_used[ri] = true;
            tag_used[ti] = true;
            matched += 1;
        }
    }
    let total = releases.len();
    CorrelationScore {
        matched,
        total,
        score: if total == 0 { 0.0 } else { matched as f64 / total as f64 },
    }
}

/// The package or repository whose identity a confused claim borrows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Victim {
    pub name: String,
    pub repo: RepoId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Confused { victim: Victim },
    Unverifiable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Confused { .. } => "confused",
            Verdict::Unverifiable => "unverifiable",
        }
    }

    pub fn victim(&self) -> Option<&Victim> {
        match self {
            Verdict::Confused { victim } => Some(victim),
            _ => None,
        }
    }
}

/// One finding recorded while checking a claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    NoClaim,
    UnrecognizedUrl { url: String },
    RegistryHit { repo: String, owner: String, owned_by_claimant: bool },
    RegistryMiss { repo: String },
    NoRepoSnapshot,
    ManifestBackReference { declared: Vec<String>, matches: bool },
    RepoNameRelation { target: String, relation: NameRelation },
    RegistryNameRelation { target: String, relation: NameRelation },
    RegistryNamesUnrelated { checked: usize },
    ReleaseCorrelation { score: CorrelationScore, verifies: bool },
}

impl Evidence {
    /// Whether the finding supports the claim being genuine.
    pub fn is_positive(&self) -> bool {
        match self {
            Evidence::RegistryHit { owned_by_claimant, .. } => *owned_by_claimant,
            Evidence::ManifestBackReference { matches, .. } => *matches,
            Evidence::RepoNameRelation { relation, .. } => relation.kind == RelationKind::Exact,
            Evidence::ReleaseCorrelation { verifies, .. } => *verifies,
            _ => false,
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evidence::NoClaim => f.write_str("no-claim"),
            Evidence::UnrecognizedUrl { url } => write!(f, "unrecognized-url:{url}"),
            Evidence::RegistryHit { owner, .. } => write!(f, "registry-hit:{owner}"),
            Evidence::RegistryMiss { .. } => f.write_str("registry-miss"),
            Evidence::NoRepoSnapshot => f.write_str("no-repo-snapshot"),
            Evidence::ManifestBackReference { matches, .. } => {
                write!(f, "manifest:{}", if *matches { "match" } else { "no-match" })
            }
            Evidence::RepoNameRelation { target, relation } => write!(
                f,
                "repo-name:{}({})->{target}",
                relation.kind.as_str(),
                relation.edit_distance
            ),
            Evidence::RegistryNameRelation { target, relation } => write!(
                f,
                "registry-name:{}({})->{target}",
                relation.kind.as_str(),
                relation.edit_distance
            ),
            Evidence::RegistryNamesUnrelated { checked } => write!(f, "registry-names:none-of-{checked}"),
            Evidence::ReleaseCorrelation { score, .. } => {
                write!(f, "release-correlation:{}/{}", score.matched, score.total)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
}

impl ConfusionVerdict {
    fn new(verdict: Verdict, evidence: Vec<Evidence>) -> Self {
        Self { verdict, evidence }
    }

    pub fn is_confused(&self) -> bool {
        matches!(self.verdict, Verdict::Confused { .. })
    }
}

/// Classifies the repository claim of `pkg`.
///
/// Rules, in order: no claim; registry ownership; manifest back-reference;
/// name relation to the repository name and to registered package names;
/// release/tag correlation. The first decisive rule wins and the evidence
/// lists every rule consulted up to that point.
pub fn classify_repo_claim(
    pkg: &PackageSnapshot,
    repo: Option<&RepoSnapshot>,
    registry: &RepoRegistry,
) -> ConfusionVerdict {
    let mut evidence = Vec::new();
    let Some(url) = pkg.repo_url.as_deref().filter(|u| !u.trim().is_empty()) else {
        evidence.push(Evidence::NoClaim);
        return ConfusionVerdict::new(Verdict::Unverifiable, evidence);
    };
    let Some(claimed) = RepoId::parse(url) else {
        evidence.push(Evidence::UnrecognizedUrl { url: url.to_string() });
        return ConfusionVerdict::new(Verdict::Unverifiable, evidence);
    };
    let me = &pkg.normalized_name;

    // registry ownership
    if let Some(entry) = registry.lookup(&claimed) {
        let owned = &entry.package == me;
        evidence.push(Evidence::RegistryHit {
            repo: claimed.slug(),
            owner: entry.package.to_string(),
            owned_by_claimant: owned,
        });
        if owned {
            return ConfusionVerdict::new(Verdict::Verified, evidence);
        }
        evidence.push(Evidence::RegistryNameRelation {
            target: entry.package.to_string(),
            relation: name_relation(me, &entry.package),
        });
        let victim = Victim {
            name: entry.package.to_string(),
            repo: entry.repo.clone(),
        };
        return ConfusionVerdict::new(Verdict::Confused { victim }, evidence);
    }
    evidence.push(Evidence::RegistryMiss { repo: claimed.slug() });

    // manifest back-reference
    match repo {
        Some(r) => {
            let matches = r
                .manifest_package_names
                .iter()
                .any(|n| PackageName::new(n).is_ok_and(|n| &n == me));
            evidence.push(Evidence::ManifestBackReference {
                declared: r.manifest_package_names.clone(),
                matches,
            });
            if matches {
                return ConfusionVerdict::new(Verdict::Verified, evidence);
            }
        }
        None => evidence.push(Evidence::NoRepoSnapshot),
    }

    // name relations
    if let Ok(repo_name) = PackageName::new(&claimed.name) {
        let relation = name_relation(me, &repo_name);
        let kind = relation.kind;
        evidence.push(Evidence::RepoNameRelation {
            target: repo_name.to_string(),
            relation,
        });
        if kind == RelationKind::Exact {
            return ConfusionVerdict::new(Verdict::Verified, evidence);
        }
        if kind.is_lookalike() {
            let victim = Victim {
                name: repo_name.to_string(),
                repo: claimed,
            };
            return ConfusionVerdict::new(Verdict::Confused { victim }, evidence);
        }
    }
    let lookalike = registry
        .entries()
        .map(|e| (e, name_relation(me, &e.package)))
        .filter(|(_, rel)| rel.kind.is_lookalike())
        .min_by_key(|(e, rel)| (rel.kind == RelationKind::SmallEdit, e.package.clone()));
    if let Some((entry, relation)) = lookalike {
        evidence.push(Evidence::RegistryNameRelation {
            target: entry.package.to_string(),
            relation,
        });
        let victim = Victim {
            name: entry.package.to_string(),
            repo: entry.repo.clone(),
        };
        return ConfusionVerdict::new(Verdict::Confused { victim }, evidence);
    }
    evidence.push(Evidence::RegistryNamesUnrelated {
        checked: registry.len(),
    });

    // release/tag correlation
    match repo {
        Some(r) => {
            let score = correlate_releases(&pkg.releases, &r.tags);
            let verifies = score.verifies();
            evidence.push(Evidence::ReleaseCorrelation { score, verifies });
            if verifies {
                return ConfusionVerdict::new(Verdict::Verified, evidence);
            }
        }
        None => evidence.push(Evidence::NoRepoSnapshot),
    }
    ConfusionVerdict::new(Verdict::Unverifiable, evidence)
}
