use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Serialize, Serializer};

/// A repository identified by forge host, owner and name.
///
/// Display keeps the original casing; equality and hashing use the
/// lowercased [`RepoId::key`].
#[derive(Debug, Clone, Eq)]
pub struct RepoId {
    pub host: String,
    pub owner: String,
    pub name: String,
}

impl RepoId {
    /// Accepts https/http/git/ssh URLs, `git+` prefixes, scp-style
    /// `git@host:owner/name` and scheme-less `host/owner/name`. Extra path
    /// segments (`/tree/main`, `/issues`) and a `.git` suffix are dropped.
    pub fn parse(url: &str) -> Option<Self> {
        let mut s = url.trim();
        if s.is_empty() {
            return None;
        }
        s = s.strip_prefix("git+").unwrap_or(s);
        let rest = if let Some(idx) = s.find("://") {
            &s[idx + 3..]
        } else if let Some(scp) = s.strip_prefix("git@") {
            // git@github.com:owner/name
            let (host, path) = scp.split_once(':')?;
            return Self::from_parts(host, path);
        } else {
            s
        };
        let rest = rest.rsplit_once('@').map_or(rest, |(_, r)| r);
        let (host, path) = rest.split_once('/')?;
        Self::from_parts(host, path)
    }

    fn from_parts(host: &str, path: &str) -> Option<Self> {
        let host = host.split(':').next()?.to_ascii_lowercase();
        let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
        if host.is_empty() || !host.contains('.') {
            return None;
        }
        let path = path.split(['?', '#']).next()?;
        let mut segments = path.split('/').filter(|s| !s.is_empty());
        let owner = segments.next()?.to_string();
        let name = segments.next()?;
        let name = name.strip_suffix(".git").unwrap_or(name).to_string();
        if name.is_empty() {
            return None;
        }
        Some(Self { host, owner, name })
    }

    pub fn canonical_url(&self) -> String {
        format!("https://{}/{}/{}", self.host, self.owner, self.name)
    }

    /// Lowercased canonical URL used as a lookup key.
    pub fn key(&self) -> String {
        self.canonical_url().to_ascii_lowercase()
    }

    /// `owner/name`, the form used in reports.
    pub fn slug(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }
}

impl PartialEq for RepoId {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Hash for RepoId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

impl Serialize for RepoId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical_url())
    }
}
