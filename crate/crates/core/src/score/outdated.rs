//! Outdated-dependency check against an index view of latest versions.
//!
//! Only what is needed to decide "does this constraint exclude the latest
//! release" is understood: exact pins (optionally with a trailing `.*`),
//! `<`, `<=`, `~=` and `===`. Lower bounds and `!=` never exclude the latest
//! release for this purpose. Anything that cannot be read is treated as not
//! outdated.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{normalize_name, Dependency};

/// Latest known version text per normalized package name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexView {
    latest: BTreeMap<String, String>,
}

impl IndexView {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, latest_version: impl Into<String>) {
        if let Ok(key) = normalize_name(name) {
            self.latest.insert(key, latest_version.into());
        }
    }

    pub fn latest(&self, name: &str) -> Option<&str> {
        let key = normalize_name(name).ok()?;
        self.latest.get(&key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.latest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latest.is_empty()
    }
}

impl<S: AsRef<str>, V: Into<String>> FromIterator<(S, V)> for IndexView {
    fn from_iter<T: IntoIterator<Item = (S, V)>>(iter: T) -> Self {
        let mut view = IndexView::new();
        for (name, version) in iter {
            view.insert(name.as_ref(), version);
        }
        view
    }
}

/// Dotted numeric release segment, e.g. `2.31.0`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ReleaseNumber(Vec<u64>);

impl ReleaseNumber {
    fn parse(text: &str) -> Option<Self> {
        let text = text.trim().trim_start_matches(['v', 'V']);
        if text.is_empty() {
            return None;
        }
        text.split('.')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                    None
                } else {
                    p.parse().ok()
                }
            })
            .collect::<Option<Vec<u64>>>()
            .map(Self)
    }

    fn get(&self, i: usize) -> u64 {
        self.0.get(i).copied().unwrap_or(0)
    }

    fn cmp_padded(&self, other: &Self) -> Ordering {
        let len = self.0.len().max(other.0.len());
        (0..len)
            .map(|i| self.get(i).cmp(&other.get(i)))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }

    fn starts_with(&self, prefix: &Self) -> bool {
        (0..prefix.0.len()).all(|i| self.get(i) == prefix.0[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Clause {
    Exact(ReleaseNumber),
    Prefix(ReleaseNumber),
    Identity(String),
    Below(ReleaseNumber),
    AtMost(ReleaseNumber),
    /// `~=X.Y[.Z]`: upper bound is the prefix with its last kept part bumped.
    Compatible(ReleaseNumber),
    Ignored,
}

impl Clause {
    fn parse(raw: &str) -> Option<Self> {
        let raw = raw.trim();
        let ops = ["===", "==", "~=", "<=", ">=", "!=", "<", ">"];
        let (op, rest) = ops
            .iter()
            .find_map(|op| raw.strip_prefix(op).map(|rest| (*op, rest.trim())))
            .unwrap_or(("==", raw));
        if rest.is_empty() {
            return None;
        }
        Some(match op {
            "===" => Clause::Identity(rest.to_string()),
            "==" => match rest.strip_suffix(".*") {
                Some(prefix) => Clause::Prefix(ReleaseNumber::parse(prefix)?),
                None => Clause::Exact(ReleaseNumber::parse(rest)?),
            },
            "<" => Clause::Below(ReleaseNumber::parse(rest)?),
            "<=" => Clause::AtMost(ReleaseNumber::parse(rest)?),
            "~=" => {
                let v = ReleaseNumber::parse(rest)?;
                if v.0.len() < 2 {
                    return None;
                }
                Clause::Compatible(v)
            }
            _ => Clause::Ignored,
        })
    }

    fn excludes(&self, latest_text: &str, latest: &ReleaseNumber) -> bool {
        match self {
            Clause::Exact(v) => latest.cmp_padded(v) != Ordering::Equal,
            Clause::Prefix(p) => !latest.starts_with(p),
            Clause::Identity(s) => s != latest_text.trim(),
            Clause::Below(v) => latest.cmp_padded(v) != Ordering::Less,
            Clause::AtMost(v) => latest.cmp_padded(v) == Ordering::Greater,
            Clause::Compatible(v) => {
                let mut upper: Vec<u64> = v.0[..v.0.len() - 1].to_vec();
                *upper.last_mut().expect("at least one part") += 1;
                latest.cmp_padded(&ReleaseNumber(upper)) != Ordering::Less
            }
            Clause::Ignored => false,
        }
    }
}

/// Whether `constraint` excludes `latest`. Empty, unparseable or
/// unresolvable constraints are not outdated.
pub fn constraint_excludes(constraint: &str, latest: &str) -> bool {
    let cleaned = constraint.trim().trim_start_matches('(').trim_end_matches(')');
    if cleaned.trim().is_empty() {
        return false;
    }
    let Some(latest_num) = ReleaseNumber::parse(latest) else {
        return false;
    };
    let clauses: Option<Vec<Clause>> = cleaned.split(',').map(Clause::parse).collect();
    match clauses {
        Some(clauses) => clauses.iter().any(|c| c.excludes(latest, &latest_num)),
        None => false,
    }
}

pub fn is_outdated(dep: &Dependency, index: &IndexView) -> bool {
    index
        .latest(&dep.name)
        .is_some_and(|latest| constraint_excludes(&dep.constraint, latest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_pins() {
        assert!(constraint_excludes("==2.30.0", "2.31.0"));
        assert!(!constraint_excludes("==2.31", "2.31.0"));
        assert!(constraint_excludes("2.30.0", "2.31.0"));
        assert!(!constraint_excludes("==2.*", "2.31.0"));
        assert!(constraint_excludes("==1.*", "2.31.0"));
        assert!(constraint_excludes("===2.31", "2.31.0"));
    }

    #[test]
    fn upper_bounds() {
        assert!(constraint_excludes(">=2.0,<2.31", "2.31.0"));
        assert!(!constraint_excludes(">=2.0,<3", "2.31.0"));
        assert!(!constraint_excludes("<=2.31.0", "2.31.0"));
        assert!(constraint_excludes("<=2.30.9", "2.31.0"));
        assert!(constraint_excludes("~=2.30", "3.0.0"));
        assert!(!constraint_excludes("~=2.30", "2.31.0"));
        assert!(constraint_excludes("~=2.30.1", "2.31.0"));
        assert!(!constraint_excludes("(<3)", "2.31.0"));
    }

    #[test]
    fn lenient_cases_are_not_outdated() {
        assert!(!constraint_excludes("", "2.31.0"));
        assert!(!constraint_excludes(">=1.0", "2.31.0"));
        assert!(!constraint_excludes("!=2.31.0", "2.31.0"));
        assert!(!constraint_excludes("^1.2", "2.31.0"));
        assert!(!constraint_excludes("==1.0", "2.0.0rc1"));
        assert!(!constraint_excludes("~=2", "3.0"));
    }

    #[test]
    fn index_lookup_uses_normalized_names() {
        let index: IndexView = [("Requests", "2.32.3")].into_iter().collect();
        assert!(is_outdated(&Dependency::new("requests", "==2.0.0"), &index));
        assert!(!is_outdated(&Dependency::new("unknown", "==2.0.0"), &index));
    }
}
