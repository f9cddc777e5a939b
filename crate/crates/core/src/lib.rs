//! Package trust scoring toolkit: SourceRank recomputation, evasion
//! simulation, repository-claim verification and evaluation reports.

pub mod confusion;
pub mod eval;
pub mod evasion;
pub mod ingest;
pub mod model;
pub mod score;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod version;

pub use confusion::{classify_repo_claim, ConfusionVerdict, RepoRegistry};
pub use evasion::{apply_technique, plan_max_inflation, EvasionReport, EvasionStep, Technique};
pub use model::{
    LabeledCorpus, Label, PackageName, PackageSnapshot, PackageStatus, Release, RepoSnapshot, Timestamp,
};
pub use score::{score_breakdown, MetricBreakdown};
pub use version::{parse_semver, Version};
