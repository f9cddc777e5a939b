//! Registry-canonical package names.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A package name in canonical form: lowercase, with every run of `-`, `_`
/// and `.` collapsed into a single `-`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PackageName(String);

impl PackageName {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        normalize_name(raw).map(Self)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The name with all separators removed, used for edit-distance checks.
    pub fn stripped(&self) -> String {
        self.0.chars().filter(|c| *c != '-').collect()
    }

    /// Hyphen-delimited tokens. Empty tokens (leading or trailing hyphens)
    /// are kept so that token sequences reassemble to the original name.
    pub fn tokens(&self) -> Vec<&str> {
        self.0.split('-').collect()
    }
}

impl fmt::Display for PackageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for PackageName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PackageName {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let normalized = normalize_name(&value)?;
        if normalized != value {
            return Err(ModelError::InvalidName(format!(
                "{value:?} is not normalized (expected {normalized:?})"
            )));
        }
        Ok(Self(normalized))
    }
}

impl From<PackageName> for String {
    fn from(value: PackageName) -> Self {
        value.0
    }
}

fn is_separator(c: char) -> bool {
    matches!(c, '-' | '_' | '.')
}

/// Lowercases `raw` and collapses separator runs into a single hyphen.
pub fn normalize_name(raw: &str) -> Result<String, ModelError> {
    if raw.trim().is_empty() {
        return Err(ModelError::InvalidName("empty package name".into()));
    }
    let mut out = String::with_capacity(raw.len());
    let mut in_run = false;
    for c in raw.trim().chars() {
        if is_separator(c) {
            if !in_run {
                out.push('-');
            }
            in_run = true;
        } else {
            out.extend(c.to_lowercase());
            in_run = false;
        }
    }
    Ok(out)
}
