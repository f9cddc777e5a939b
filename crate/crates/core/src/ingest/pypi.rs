use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Fetcher, IngestError, Request, Source};
use crate::confusion::RepoId;
use crate::model::{normalize_name, parse_timestamp, Dependency, PackageSnapshot, Release, Timestamp};

pub(crate) const FORGE_HOSTS: [&str; 3] = ["github.com", "gitlab.com", "bitbucket.org"];

#[derive(Debug, Deserialize)]
struct Document {
    info: Info,
    #[serde(default)]
    releases: BTreeMap<String, Vec<FileInfo>>,
}

#[derive(Debug, Deserialize)]
struct Info {
    name: String,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    home_page: Option<String>,
    #[serde(default)]
    keywords: Option<String>,
    #[serde(default)]
    project_urls: Option<BTreeMap<String, String>>,
    #[serde(default)]
    requires_dist: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct FileInfo {
    upload_time_iso_8601: Option<String>,
    #[serde(default)]
    yanked: bool,
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty() && s != "UNKNOWN")
}

fn is_forge_url(url: &str) -> bool {
    RepoId::parse(url).is_some_and(|id| FORGE_HOSTS.contains(&id.host.as_str()))
}

/// Repository URL from `project_urls` (source-like labels first), falling
/// back to a forge-hosted home page.
fn pick_repo_url(project_urls: &BTreeMap<String, String>, home_page: Option<&str>) -> Option<String> {
    const LABELS: [&str; 5] = ["source", "repository", "code", "github", "gitlab"];
    let labelled = LABELS.iter().find_map(|label| {
        project_urls
            .iter()
            .find(|(k, v)| k.to_ascii_lowercase().contains(label) && is_forge_url(v))
            .map(|(_, v)| v.clone())
    });
    labelled
        .or_else(|| home_page.filter(|u| is_forge_url(u)).map(str::to_string))
        .or_else(|| project_urls.values().find(|v| is_forge_url(v)).cloned())
}

fn split_keywords(raw: &str) -> Vec<String> {
    let sep = if raw.contains(',') { ',' } else { ' ' };
    raw.split(sep).map(str::trim).filter(|k| !k.is_empty()).map(str::to_string).collect()
}

/// `"requests (>=2.0) ; python_version > '3'"` → `("requests", ">=2.0")`.
/// Extras-only requirements are optional and skipped.
pub(crate) fn parse_requirement(spec: &str) -> Option<Dependency> {
    let (req, marker) = spec.split_once(';').unwrap_or((spec, ""));
    if marker.contains("extra") {
        return None;
    }
    let req = req.trim();
    let end = req
        .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')))
        .unwrap_or(req.len());
    let name = normalize_name(&req[..end]).ok()?;
    let mut rest = req[end..].trim();
    if rest.starts_with('[') {
        rest = rest.split_once(']').map_or("", |(_, r)| r).trim();
    }
    let constraint: String = rest.chars().filter(|c| !matches!(c, '(' | ')') && !c.is_whitespace()).collect();
    Some(Dependency::new(name, constraint))
}

/// Maps an index metadata document to a snapshot. Registry-only fields
/// (dependents, subscribers, status) are left at their defaults.
pub fn parse_package_document(json: &str, captured_at: Timestamp) -> Result<PackageSnapshot, IngestError> {
    let doc: Document = serde_json::from_str(json).map_err(|e| IngestError::parse("package document", e))?;
    let info = doc.info;
    let mut pkg = PackageSnapshot::new(&info.name, captured_at).map_err(|e| IngestError::parse("package name", e))?;
    pkg.description = non_blank(info.summary);
    let home_page = non_blank(info.home_page);
    let project_urls = info.project_urls.unwrap_or_default();
    pkg.repo_url = pick_repo_url(&project_urls, home_page.as_deref());
    pkg.homepage_url = home_page.or_else(|| {
        project_urls
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("homepage"))
            .map(|(_, v)| v.clone())
    });
    pkg.keywords = info.keywords.as_deref().map(split_keywords).unwrap_or_default();
    pkg.dependencies = info
        .requires_dist
        .unwrap_or_default()
        .iter()
        .filter_map(|r| parse_requirement(r))
        .collect();

    for (version, files) in doc.releases {
        // a release with no live files has no publish time
        let earliest = files
            .iter()
            .filter(|f| !f.yanked)
            .filter_map(|f| f.upload_time_iso_8601.as_deref())
            .map(|t| parse_timestamp(t).map_err(|e| IngestError::parse(format!("upload time of {version}"), e)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .min();
        if let Some(at) = earliest {
            pkg.releases.push(Release::new(version, at));
        }
    }
    pkg.releases
        .sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.version_text.cmp(&b.version_text)));
    if let Some(last) = pkg.latest_release() {
        pkg.captured_at = pkg.captured_at.max(last.published_at);
    }
    Ok(pkg)
}

pub fn fetch_package_metadata(
    name: &str,
    fetcher: &Fetcher,
    captured_at: Timestamp,
) -> Result<PackageSnapshot, IngestError> {
    let normalized = normalize_name(name).map_err(|e| IngestError::parse("package name", e))?;
    let request = Request::new(
        Source::Pypi,
        format!("{normalized}.json"),
        format!("https://pypi.org/pypi/{normalized}/json"),
    );
    let body = fetcher.get_ok(&request, &format!("package {normalized}"))?;
    parse_package_document(&body, captured_at)
}
