//! Semantic Versioning 2.0.0 parsing and precedence, plus the release-history
//! flags that feed the score.

use std::cmp::Ordering;
use std::fmt;

use chrono::Duration;
use thiserror::Error;

use crate::model::{Release, Timestamp};

/// The fixed length of "six months".
pub const SIX_MONTHS_DAYS: i64 = 183;

pub fn six_months() -> Duration {
    Duration::days(SIX_MONTHS_DAYS)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Identifier {
    Numeric(u64),
    AlphaNumeric(String),
}

impl Identifier {
    fn precedence(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Identifier::Numeric(a), Identifier::Numeric(b)) => a.cmp(b),
            (Identifier::Numeric(_), Identifier::AlphaNumeric(_)) => Ordering::Less,
            (Identifier::AlphaNumeric(_), Identifier::Numeric(_)) => Ordering::Greater,
            (Identifier::AlphaNumeric(a), Identifier::AlphaNumeric(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Numeric(n) => write!(f, "{n}"),
            Identifier::AlphaNumeric(s) => f.write_str(s),
        }
    }
}

/// A parsed SemVer version. Equality is structural (build metadata included);
/// use [`compare`] for precedence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub prerelease: Vec<Identifier>,
    pub build: Option<Vec<String>>,
}

impl Version {
    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        Self {
            major,
            minor,
            patch,
            prerelease: Vec::new(),
            build: None,
        }
    }

    pub fn is_prerelease(&self) -> bool {
        !self.prerelease.is_empty()
    }

    pub fn core(&self) -> (u64, u64, u64) {
        (self.major, self.minor, self.patch)
    }

    pub fn parse(text: &str) -> Result<Self, VersionError> {
        parse_semver(text)
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        if !self.prerelease.is_empty() {
            f.write_str("-")?;
            for (i, id) in self.prerelease.iter().enumerate() {
                if i > 0 {
                    f.write_str(".")?;
                }
                write!(f, "{id}")?;
            }
        }
        if let Some(build) = &self.build {
            write!(f, "+{}", build.join("."))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Version {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_semver(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseReason {
    Empty,
    ComponentCount,
    LeadingZero,
    EmptyIdentifier,
    IllegalCharacter,
    Overflow,
}

impl ParseReason {
    pub fn code(self) -> &'static str {
        match self {
            ParseReason::Empty => "empty",
            ParseReason::ComponentCount => "component-count",
            ParseReason::LeadingZero => "leading-zero",
            ParseReason::EmptyIdentifier => "empty-identifier",
            ParseReason::IllegalCharacter => "illegal-character",
            ParseReason::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid semver {input:?}: {}", reason.code())]
pub struct VersionError {
    pub input: String,
    pub reason: ParseReason,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-'
}

fn parse_numeric(part: &str) -> Result<u64, ParseReason> {
    if part.is_empty() {
        return Err(ParseReason::EmptyIdentifier);
    }
    if !part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseReason::IllegalCharacter);
    }
    if part.len() > 1 && part.starts_with('0') {
        return Err(ParseReason::LeadingZero);
    }
    part.parse().map_err(|_| ParseReason::Overflow)
}

fn parse_prerelease_ident(part: &str) -> Result<Identifier, ParseReason> {
    if part.is_empty() {
        return Err(ParseReason::EmptyIdentifier);
    }
    if !part.chars().all(is_ident_char) {
        return Err(ParseReason::IllegalCharacter);
    }
    if part.bytes().all(|b| b.is_ascii_digit()) {
        parse_numeric(part).map(Identifier::Numeric)
    } else {
        Ok(Identifier::AlphaNumeric(part.to_string()))
    }
}

fn parse_inner(text: &str) -> Result<Version, ParseReason> {
    if text.is_empty() {
        return Err(ParseReason::Empty);
    }
    let (rest, build) = match text.split_once('+') {
        Some((rest, build)) => (rest, Some(build)),
        None => (text, None),
    };
    let (core, pre) = match rest.split_once('-') {
        Some((core, pre)) => (core, Some(pre)),
        None => (rest, None),
    };

    let parts: Vec<&str> = core.split('.').collect();
    if parts.len() != 3 {
        return Err(ParseReason::ComponentCount);
    }
    let major = parse_numeric(parts[0])?;
    let minor = parse_numeric(parts[1])?;
    let patch = parse_numeric(parts[2])?;

    let prerelease = match pre {
        Some(pre) => pre
            .split('.')
            .map(parse_prerelease_ident)
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    let build = match build {
        Some(build) => Some(
            build
                .split('.')
                .map(|id| {
                    if id.is_empty() {
                        Err(ParseReason::EmptyIdentifier)
                    } else if !id.chars().all(is_ident_char) {
                        Err(ParseReason::IllegalCharacter)
                    } else {
                        Ok(id.to_string())
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };

    Ok(Version {
        major,
        minor,
        patch,
        prerelease,
        build,
    })
}

/// Parses exactly the SemVer 2.0.0 grammar.
pub fn parse_semver(text: &str) -> Result<Version, VersionError> {
    parse_inner(text).map_err(|reason| VersionError {
        input: text.to_string(),
        reason,
    })
}

/// SemVer precedence. Build metadata is ignored.
pub fn compare(a: &Version, b: &Version) -> Ordering {
    a.core().cmp(&b.core()).then_with(|| {
        match (a.prerelease.is_empty(), b.prerelease.is_empty()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                for (x, y) in a.prerelease.iter().zip(&b.prerelease) {
                    let ord = x.precedence(y);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                a.prerelease.len().cmp(&b.prerelease.len())
            }
        }
    })
}

/// Boolean release-history metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReleaseFlags {
    pub has_multiple_versions: bool,
    pub follows_semver: bool,
    pub recent_release: bool,
    pub not_brand_new: bool,
    pub ge_1_0_0: bool,
    pub all_prereleases: bool,
}

/// Derives the release flags as of `now`. Publish-time extremes are taken
/// with min/max so the result does not depend on list order.
pub fn release_flags(releases: &[Release], now: Timestamp) -> ReleaseFlags {
    if releases.is_empty() {
        return ReleaseFlags::default();
    }
    let parsed: Vec<Option<Version>> = releases
        .iter()
        .map(|r| parse_semver(&r.version_text).ok())
        .collect();
    let all_parse = parsed.iter().all(Option::is_some);

    let latest = releases.iter().map(|r| r.published_at).max().unwrap();
    let earliest = releases.iter().map(|r| r.published_at).min().unwrap();

    ReleaseFlags {
        has_multiple_versions: releases.len() >= 2,
        follows_semver: all_parse,
        recent_release: now - latest <= six_months(),
        not_brand_new: now - earliest >= six_months(),
        ge_1_0_0: parsed
            .iter()
            .flatten()
            .any(|v| !v.is_prerelease() && v.major >= 1),
        all_prereleases: all_parse && parsed.iter().flatten().all(Version::is_prerelease),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_timestamp;
    use proptest::prelude::*;

    fn v(s: &str) -> Version {
        parse_semver(s).unwrap()
    }

    #[test]
    fn parses_core_and_prerelease() {
        assert_eq!(v("1.2.3"), Version::new(1, 2, 3));
        let pre = v("1.0.0-alpha.1");
        assert_eq!(
            pre.prerelease,
            vec![Identifier::AlphaNumeric("alpha".into()), Identifier::Numeric(1)]
        );
        assert_eq!(pre.build, None);
        assert_eq!(
            v("1.0.0+20130313144700").build,
            Some(vec!["20130313144700".to_string()])
        );
    }

    #[test]
    fn error_reasons() {
        let reason = |s: &str| parse_semver(s).unwrap_err().reason;
        assert_eq!(reason("07.1.2"), ParseReason::LeadingZero);
        assert_eq!(reason("1.2"), ParseReason::ComponentCount);
        assert_eq!(reason(""), ParseReason::Empty);
        assert_eq!(reason("1.0.0-"), ParseReason::EmptyIdentifier);
        assert_eq!(reason("1.0.0-a..b"), ParseReason::EmptyIdentifier);
        assert_eq!(reason("1.0.0-a_b"), ParseReason::IllegalCharacter);
        assert_eq!(reason("1.0.0-01"), ParseReason::LeadingZero);
        assert_eq!(reason("99999999999999999999.0.0"), ParseReason::Overflow);
    }

    #[test]
    fn precedence_examples() {
        assert_eq!(compare(&v("1.0.0-alpha"), &v("1.0.0")), Ordering::Less);
        assert_eq!(compare(&v("1.0.0-alpha.1"), &v("1.0.0-alpha.beta")), Ordering::Less);
        assert_eq!(compare(&v("2.1.0+build.5"), &v("2.1.0")), Ordering::Equal);
    }

    #[test]
    fn semver_spec_ordering_chain() {
        let chain = [
            "1.0.0-alpha",
            "1.0.0-alpha.1",
            "1.0.0-alpha.beta",
            "1.0.0-beta",
            "1.0.0-beta.2",
            "1.0.0-beta.11",
            "1.0.0-rc.1",
            "1.0.0",
            "2.0.0",
            "2.1.0",
            "2.1.1",
        ];
        for pair in chain.windows(2) {
            assert_eq!(compare(&v(pair[0]), &v(pair[1])), Ordering::Less, "{pair:?}");
        }
    }

    fn days_before(now: Timestamp, days: i64) -> Timestamp {
        now - Duration::days(days)
    }

    #[test]
    fn flags_for_single_young_release() {
        let now = parse_timestamp("2024-12-01T00:00:00Z").unwrap();
        let flags = release_flags(&[Release::new("0.6.7", days_before(now, 10))], now);
        assert_eq!(
            flags,
            ReleaseFlags {
                has_multiple_versions: false,
                follows_semver: true,
                recent_release: true,
                not_brand_new: false,
                ge_1_0_0: false,
                all_prereleases: false,
            }
        );
    }

    #[test]
    fn flags_for_old_prereleases() {
        let now = parse_timestamp("2024-12-01T00:00:00Z").unwrap();
        let rels = [
            Release::new("1.0.0-rc.1", days_before(now, 200)),
            Release::new("1.0.0-rc.2", days_before(now, 200)),
        ];
        let flags = release_flags(&rels, now);
        assert!(flags.all_prereleases);
        assert!(flags.not_brand_new);
        assert!(!flags.recent_release);
        assert!(!flags.ge_1_0_0);
        assert!(flags.has_multiple_versions);
    }

    #[test]
    fn empty_release_list_has_no_flags() {
        let now = parse_timestamp("2024-12-01T00:00:00Z").unwrap();
        assert_eq!(release_flags(&[], now), ReleaseFlags::default());
    }

    #[test]
    fn unparseable_release_blocks_semver_and_prerelease_flags() {
        let now = parse_timestamp("2024-12-01T00:00:00Z").unwrap();
        let rels = [
            Release::new("1.0.0-beta", days_before(now, 20)),
            Release::new("2024.1", days_before(now, 10)),
        ];
        let flags = release_flags(&rels, now);
        assert!(!flags.follows_semver);
        assert!(!flags.all_prereleases);
    }

    #[test]
    fn six_month_boundaries() {
        let now = parse_timestamp("2024-12-01T00:00:00Z").unwrap();
        let exactly = release_flags(&[Release::new("1.0.0", days_before(now, 183))], now);
        assert!(exactly.recent_release && exactly.not_brand_new);
        let later = release_flags(&[Release::new("1.0.0", days_before(now, 184))], now);
        assert!(!later.recent_release && later.not_brand_new);
    }

    fn ident() -> impl Strategy<Value = Identifier> {
        prop_oneof![
            (0u64..20).prop_map(Identifier::Numeric),
            "[a-z][a-z0-9-]{0,3}".prop_map(Identifier::AlphaNumeric),
        ]
    }

    prop_compose! {
        fn version()(
            major in 0u64..4, minor in 0u64..4, patch in 0u64..4,
            prerelease in proptest::collection::vec(ident(), 0..3),
            build in proptest::option::of(proptest::collection::vec("[0-9A-Za-z-]{1,4}", 1..3)),
        ) -> Version {
            Version { major, minor, patch, prerelease, build }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn precedence_is_a_total_order(a in version(), b in version(), c in version()) {
            prop_assert_eq!(compare(&a, &a), Ordering::Equal);
            prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
            if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare(&a, &c), Ordering::Greater);
            }
        }

        #[test]
        fn render_parse_round_trip(a in version()) {
            prop_assert_eq!(parse_semver(&a.to_string()).unwrap(), a);
        }
    }

    proptest! {
        #[test]
        fn not_brand_new_is_monotone_in_now(age in 0i64..400, extra in 0i64..400) {
            let base = parse_timestamp("2024-01-01T00:00:00Z").unwrap();
            let rel = [Release::new("1.0.0", base)];
            let t = base + Duration::days(age);
            if release_flags(&rel, t).not_brand_new {
                prop_assert!(release_flags(&rel, t + Duration::days(extra)).not_brand_new);
            }
        }
    }
}
