use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::{Fetcher, IngestError, Request, Source};
use crate::confusion::RepoId;
use crate::model::{normalize_name, parse_timestamp, RepoSnapshot, Tag, Timestamp};

const PER_PAGE: usize = 100;
const MAX_CONTRIBUTOR_PAGES: usize = 10;
const MANIFESTS: [&str; 3] = ["pyproject.toml", "setup.cfg", "setup.py"];

#[derive(Debug, Deserialize)]
struct RepoDoc {
    #[serde(default)]
    stargazers_count: u64,
}

#[derive(Debug, Deserialize)]
struct ReleaseDoc {
    tag_name: String,
    published_at: Option<String>,
    created_at: Option<String>,
}

fn setup_py_name() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"\bname\s*=\s*['"]([A-Za-z0-9._-]+)['"]"#).expect("valid regex"))
}

/// Package name declared by a packaging manifest, if any.
pub fn manifest_package_name(file: &str, content: &str) -> Option<String> {
    let raw = match file {
        "pyproject.toml" => {
            let doc: toml::Table = toml::from_str(content).ok()?;
            let project = doc.get("project").and_then(|p| p.get("name"));
            let poetry = doc
                .get("tool")
                .and_then(|t| t.get("poetry"))
                .and_then(|p| p.get("name"));
            project.or(poetry)?.as_str()?.to_string()
        }
        "setup.cfg" => {
            let mut in_metadata = false;
            let mut found = None;
            for line in content.lines().map(str::trim) {
                if line.starts_with('[') {
                    in_metadata = line == "[metadata]";
                } else if in_metadata {
                    if let Some((k, v)) = line.split_once('=') {
                        if k.trim() == "name" {
                            found = Some(v.trim().to_string());
                            break;
                        }
                    }
                }
            }
            found?
        }
        "setup.py" => setup_py_name().captures(content)?.get(1)?.as_str().to_string(),
        _ => return None,
    };
    normalize_name(&raw).ok()
}

fn api_request(fetcher: &Fetcher, key: String, url: String) -> Request {
    let req = Request::new(Source::Forge, key, url).header("Accept", "application/vnd.github+json");
    match fetcher.policy().credentials.forge_token() {
        Some(token) if !fetcher.policy().offline => req.header("Authorization", format!("Bearer {token}")),
        _ => req,
    }
}

/// Fetches stars, contributors, readme presence, release tags and manifest
/// package names for a GitHub repository.
pub fn fetch_repo_metadata(url: &str, fetcher: &Fetcher, captured_at: Timestamp) -> Result<RepoSnapshot, IngestError> {
    let id = RepoId::parse(url).ok_or_else(|| IngestError::Unsupported(format!("not a repository url: {url}")))?;
    if id.host != "github.com" {
        return Err(IngestError::Unsupported(format!("forge host {}", id.host)));
    }
    let slug_key = format!("{}__{}", id.owner, id.name).to_ascii_lowercase();
    let api = format!("https://api.github.com/repos/{}/{}", id.owner, id.name);
    let what = format!("repository {}", id.slug());

    let body = fetcher.get_ok(&api_request(fetcher, format!("{slug_key}.json"), api.clone()), &what)?;
    let doc: RepoDoc = serde_json::from_str(&body).map_err(|e| IngestError::parse(&what, e))?;
    let mut repo = RepoSnapshot::from_url(&id.canonical_url(), captured_at).expect("canonical url parses");
    repo.stars = doc.stargazers_count;

    for page in 1..=MAX_CONTRIBUTOR_PAGES {
        let req = api_request(
            fetcher,
            format!("{slug_key}.contributors.{page}.json"),
            format!("{api}/contributors?per_page={PER_PAGE}&anon=1&page={page}"),
        );
        let resp = fetcher.get(&req)?;
        if !resp.is_success() || resp.body.trim().is_empty() {
            break;
        }
        let people: Vec<serde_json::Value> =
            serde_json::from_str(&resp.body).map_err(|e| IngestError::parse(format!("{what} contributors"), e))?;
        repo.contributors_count += people.len() as u64;
        if people.len() < PER_PAGE {
            break;
        }
    }

    let readme = fetcher.get(&api_request(fetcher, format!("{slug_key}.readme.json"), format!("{api}/readme")))?;
    repo.has_readme = readme.is_success();

    let releases = fetcher.get(&api_request(
        fetcher,
        format!("{slug_key}.releases.json"),
        format!("{api}/releases?per_page={PER_PAGE}"),
    ))?;
    if releases.is_success() {
        let docs: Vec<ReleaseDoc> =
            serde_json::from_str(&releases.body).map_err(|e| IngestError::parse(format!("{what} releases"), e))?;
        for r in docs {
            let Some(when) = r.published_at.or(r.created_at) else { continue };
            let at = parse_timestamp(&when).map_err(|e| IngestError::parse(format!("{what} release time"), e))?;
            repo.tags.push(Tag::new(r.tag_name, at));
        }
        repo.tags.sort_by_key(|t| t.created_at);
    }

    for file in MANIFESTS {
        let req = Request::new(
            Source::Forge,
            format!("{slug_key}.{file}"),
            format!("https://raw.githubusercontent.com/{}/{}/HEAD/{file}", id.owner, id.name),
        );
        let resp = fetcher.get(&req)?;
        if let Some(name) = resp.is_success().then(|| manifest_package_name(file, &resp.body)).flatten() {
            if !repo.manifest_package_names.contains(&name) {
                repo.manifest_package_names.push(name);
            }
        }
    }
    Ok(repo)
}
