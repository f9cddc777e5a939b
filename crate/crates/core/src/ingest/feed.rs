use std::collections::HashSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Fetcher, IngestError, Request, Source};
use crate::model::{normalize_name, serde_ts, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedKind {
    NewPackages,
    NewReleases,
}

impl FeedKind {
    pub fn key(self) -> &'static str {
        match self {
            FeedKind::NewPackages => "packages.xml",
            FeedKind::NewReleases => "updates.xml",
        }
    }

    pub fn url(self) -> String {
        format!("https://pypi.org/rss/{}", self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub name: String,
    pub version: Option<String>,
    #[serde(with = "serde_ts")]
    pub published_at: Timestamp,
    pub feed_kind: FeedKind,
}

/// Pulls `(name, version)` out of `https://pypi.org/project/<name>/<ver>/`.
fn from_link(link: &str) -> Option<(String, Option<String>)> {
    let (_, rest) = link.split_once("/project/")?;
    let mut parts = rest.split('/').filter(|p| !p.is_empty());
    let name = parts.next()?.to_string();
    Some((name, parts.next().map(str::to_string)))
}

/// Falls back to the item title: `"<name> <version>"` in the updates feed,
/// `"<name> added to PyPI"` in the new-packages feed.
fn from_title(title: &str, kind: FeedKind) -> Option<(String, Option<String>)> {
    let title = title.trim();
    let title = title.strip_suffix("added to PyPI").unwrap_or(title).trim();
    let mut words = title.split_whitespace();
    let name = words.next()?.to_string();
    let version = match kind {
        FeedKind::NewReleases => words.next().map(str::to_string),
        FeedKind::NewPackages => None,
    };
    Some((name, version))
}

/// Parses an RSS document, keeping items published strictly after
/// `cutoff`, newest-first as delivered, first occurrence of each
/// `(name, version)`.
pub fn parse_feed(xml: &str, kind: FeedKind, cutoff: Timestamp) -> Result<Vec<FeedEntry>, IngestError> {
    let what = || format!("{} feed", kind.key());
    let doc = roxmltree::Document::parse(xml).map_err(|e| IngestError::parse(what(), e))?;
    let channel = doc
        .descendants()
        .find(|n| n.has_tag_name("channel"))
        .ok_or_else(|| IngestError::parse(what(), "no <channel> element"))?;

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, item) in channel.children().filter(|n| n.has_tag_name("item")).enumerate() {
        let child_text = |tag: &str| {
            item.children()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.text())
                .map(str::trim)
        };
        let item_err = |msg: &str| IngestError::parse(what(), format!("item {}: {msg}", idx + 1));

        let (name, version) = child_text("link")
            .and_then(from_link)
            .or_else(|| child_text("title").and_then(|t| from_title(t, kind)))
            .ok_or_else(|| item_err("no package name in link or title"))?;
        let name = normalize_name(&name).map_err(|e| item_err(&e.to_string()))?;
        let date = child_text("pubDate").ok_or_else(|| item_err("missing pubDate"))?;
        let published_at = DateTime::parse_from_rfc2822(date)
            .map_err(|e| item_err(&format!("bad pubDate {date:?}: {e}")))?
            .with_timezone(&Utc);
        let published_at = crate::model::truncate_timestamp(published_at);
        if published_at <= cutoff {
            continue;
        }
        if seen.insert((name.clone(), version.clone())) {
            entries.push(FeedEntry {
                name,
                version,
                published_at,
                feed_kind: kind,
            });
        }
    }
    Ok(entries)
}

/// Fetches and parses one of the index's syndication feeds.
pub fn fetch_feed(kind: FeedKind, cutoff: Timestamp, fetcher: &Fetcher) -> Result<Vec<FeedEntry>, IngestError> {
    let request = Request::new(Source::Feeds, kind.key(), kind.url());
    let resp = fetcher.get(&request)?;
    match resp.status {
        200..=299 => parse_feed(&resp.body, kind, cutoff),
        404 if fetcher.policy().offline => Err(IngestError::Config(format!(
            "offline mode has no fixture for feed {}",
            kind.key()
        ))),
        s => Err(IngestError::Transport {
            url: super::redact(&request.url),
            attempts: 1,
            message: format!("HTTP {s}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_timestamp;

    const UPDATES: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<rss version="2.0"><channel><title>PyPI recent updates</title>
<item><title>somepkg 1.2.0</title><link>https://pypi.org/project/somepkg/1.2.0/</link>
<pubDate>Wed, 02 Oct 2024 10:00:00 GMT</pubDate></item>
<item><title>somepkg 1.2.0</title><link>https://pypi.org/project/somepkg/1.2.0/</link>
<pubDate>Wed, 02 Oct 2024 09:00:00 GMT</pubDate></item>
<item><title>Other_Pkg 0.1</title><pubDate>Tue, 01 Oct 2024 08:00:00 GMT</pubDate></item>
<item><title>old 1.0</title><link>https://pypi.org/project/old/1.0/</link>
<pubDate>Mon, 02 Sep 2024 08:00:00 GMT</pubDate></item>
</channel></rss>"#;

    fn cutoff() -> Timestamp {
        parse_timestamp("2024-09-15T00:00:00Z").unwrap()
    }

    #[test]
    fn parses_dedupes_and_filters_by_cutoff() {
        let entries = parse_feed(UPDATES, FeedKind::NewReleases, cutoff()).unwrap();
        let got: Vec<(&str, Option<&str>)> = entries.iter().map(|e| (e.name.as_str(), e.version.as_deref())).collect();
        assert_eq!(got, vec![("somepkg", Some("1.2.0")), ("other-pkg", Some("0.1"))]);
        assert_eq!(entries[0].published_at, parse_timestamp("2024-10-02T10:00:00Z").unwrap());
    }

    #[test]
    fn new_packages_titles() {
        let xml = r#"<rss><channel><item><title>shiny added to PyPI</title>
<pubDate>Thu, 03 Oct 2024 00:00:00 GMT</pubDate></item></channel></rss>"#;
        let entries = parse_feed(xml, FeedKind::NewPackages, cutoff()).unwrap();
        assert_eq!(entries[0].name, "shiny");
        assert_eq!(entries[0].version, None);
    }

    #[test]
    fn truncated_document_is_a_parse_error() {
        let cut = &UPDATES[..UPDATES.len() / 2];
        assert!(matches!(
            parse_feed(cut, FeedKind::NewReleases, cutoff()),
            Err(IngestError::Parse { .. })
        ));
    }
}
