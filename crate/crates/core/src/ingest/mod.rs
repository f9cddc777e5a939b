//! Clients for the package index, the scoring provider, the forge and the
//! advisory database.
//!
//! Every client goes through [`Fetcher`], which layers the on-disk cache,
//! offline fixtures, rate limiting and retries over a [`Transport`].

mod cache;
pub mod feed;
pub mod forge;
pub mod osv;
pub mod pypi;
pub mod reference;
pub mod transport;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;
use tracing::{debug, warn};

pub use cache::{CacheEntry, FileCache};
pub use feed::{fetch_feed, parse_feed, FeedEntry, FeedKind};
pub use forge::fetch_repo_metadata;
pub use osv::{load_osv_labels, OsvLoad, OsvRecord};
pub use pypi::{fetch_package_metadata, parse_package_document};
pub use reference::{
    enrich_snapshot, fetch_reference_record, parity_report, parse_reference, HiddenFlags, MetricMismatch, ParityReport,
    ReferenceProjectRecord,
};
pub use transport::{
    Clock, CountingTransport, FixtureTransport, NoNetwork, RateLimiter, Request, Response, ScriptedTransport, Source,
    SystemClock, Transport, TransportError, VirtualClock,
};

#[cfg(feature = "live")]
pub use transport::HttpTransport;

pub const LIBRARIESIO_KEY_VAR: &str = "LIBRARIESIO_API_KEY";
pub const FORGE_TOKEN_VAR: &str = "FORGE_TOKEN";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error("transport error for {url} after {attempts} attempt(s): {message}")]
    Transport {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("credential error: {0}")]
    Credential(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        IngestError::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }
}

/// Names of the environment variables holding credentials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credentials {
    pub librariesio_key_var: String,
    pub forge_token_var: String,
}

impl Default for Credentials {
    fn default() -> Self {
        Self {
            librariesio_key_var: LIBRARIESIO_KEY_VAR.into(),
            forge_token_var: FORGE_TOKEN_VAR.into(),
        }
    }
}

fn non_empty_env(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|v| !v.trim().is_empty())
}

impl Credentials {
    pub fn librariesio_key(&self) -> Option<String> {
        non_empty_env(&self.librariesio_key_var)
    }

    pub fn forge_token(&self) -> Option<String> {
        non_empty_env(&self.forge_token_var)
    }
}

#[derive(Debug, Clone)]
pub struct FetchPolicy {
    pub rate_limit_per_sec: f64,
    pub max_retries: u32,
    /// First retry delay; doubled on every further attempt.
    pub backoff_base: Duration,
    pub cache_dir: Option<PathBuf>,
    /// Recorded documents laid out like the cache.
    pub fixtures_dir: Option<PathBuf>,
    pub offline: bool,
    pub credentials: Credentials,
    pub parallelism: usize,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            rate_limit_per_sec: 1.0,
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
            cache_dir: None,
            fixtures_dir: None,
            offline: false,
            credentials: Credentials::default(),
            parallelism: 4,
        }
    }
}

impl FetchPolicy {
    pub fn offline(fixtures_dir: impl Into<PathBuf>) -> Self {
        Self {
            offline: true,
            fixtures_dir: Some(fixtures_dir.into()),
            ..Self::default()
        }
    }

    pub fn backoff(&self, attempt: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
    }
}

/// Drops the query string, which may carry an API key.
pub(crate) fn redact(url: &str) -> String {
    url.split('?').next().unwrap_or(url).to_string()
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Resolves requests through cache, fixtures and network according to a
/// [`FetchPolicy`]. Offline fetchers never touch the network transport.
pub struct Fetcher {
    policy: FetchPolicy,
    network: Arc<dyn Transport>,
    fixtures: Option<FixtureTransport>,
    cache: Option<FileCache>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy, network: Arc<dyn Transport>) -> Self {
        let fixtures = policy.fixtures_dir.clone().map(FixtureTransport::new);
        let cache = policy.cache_dir.clone().map(FileCache::new);
        let limiter = RateLimiter::new(policy.rate_limit_per_sec);
        Self {
            policy,
            network,
            fixtures,
            cache,
            limiter,
            clock: Arc::new(SystemClock::default()),
        }
    }

    /// Offline fetcher over a fixture directory.
    pub fn offline(fixtures_dir: impl Into<PathBuf>) -> Self {
        Self::new(FetchPolicy::offline(fixtures_dir), Arc::new(NoNetwork))
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Returns the response for `request`. Success and 404 responses are
    /// cached; other statuses are returned uncached.
    pub fn get(&self, request: &Request) -> Result<Response, IngestError> {
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.read(request.source, &request.key)? {
                debug!(source = %request.source, key = %request.key, "cache hit");
                return Ok(entry.into_response());
            }
        }
        let response = if self.policy.offline {
            let fixtures = self.fixtures.as_ref().ok_or_else(|| {
                IngestError::Config(format!(
                    "offline mode needs a fixture directory or cached copy of {}",
                    request.url
                ))
            })?;
            fixtures.get(request).map_err(|e| IngestError::Io {
                path: fixtures.path_for(request).display().to_string(),
                source: std::io::Error::other(e.0),
            })?
        } else {
            self.get_with_retries(request)?
        };
        if let Some(cache) = &self.cache {
            if response.is_success() || response.status == 404 {
                cache.write(request.source, &request.key, &response)?;
            }
        }
        Ok(response)
    }

    fn get_with_retries(&self, request: &Request) -> Result<Response, IngestError> {
        let mut attempt = 0;
        loop {
            self.limiter.acquire(self.clock.as_ref());
            let failure = match self.network.get(request) {
                Ok(resp) if !retryable(resp.status) => return Ok(resp),
                Ok(resp) => format!("HTTP {}", resp.status),
                Err(e) => e.0,
            };
            if attempt >= self.policy.max_retries {
                return Err(IngestError::Transport {
                    url: redact(&request.url),
                    attempts: attempt + 1,
                    message: failure,
                });
            }
            let delay = self.policy.backoff(attempt);
            warn!(url = %redact(&request.url), %failure, ?delay, "retrying");
            self.clock.sleep(delay);
            attempt += 1;
        }
    }

    /// Like [`Fetcher::get`] but maps 404 to `NotFound(what)`, auth failures
    /// to credential errors and other non-success statuses to transport
    /// errors.
    pub fn get_ok(&self, request: &Request, what: &str) -> Result<String, IngestError> {
        let resp = self.get(request)?;
        match resp.status {
            s if (200..300).contains(&s) => Ok(resp.body),
            404 | 410 => Err(IngestError::NotFound(what.to_string())),
            401 | 403 => Err(IngestError::Credential(format!(
                "{} rejected credentials (HTTP {})",
                request.source, resp.status
            ))),
            s => Err(IngestError::Transport {
                url: redact(&request.url),
                attempts: 1,
                message: format!("HTTP {s}"),
            }),
        }
    }

    /// Runs `f` over `items` with at most `policy.parallelism` concurrent
    /// fetches, returning results in input order.
    pub fn map_bounded<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        let threads = self.policy.parallelism.max(1);
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        }
    }
}
