use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

/// Upstream data source; also the first path component of the cache and
/// fixture layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Feeds,
    Pypi,
    Forge,
    LibrariesIo,
}

impl Source {
    pub fn dir_name(self) -> &'static str {
        match self {
            Source::Feeds => "feeds",
            Source::Pypi => "pypi",
            Source::Forge => "forge",
            Source::LibrariesIo => "librariesio",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub source: Source,
    /// File-safe cache key, unique within the source.
    pub key: String,
    pub url: String,
    pub headers: Vec<(String, String)>,
}

impl Request {
    pub fn new(source: Source, key: impl Into<String>, url: impl Into<String>) -> Self {
        Self {
            source,
            key: key.into(),
            url: url.into(),
            headers: Vec::new(),
        }
    }

    pub fn header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.push((name.to_string(), value.into()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    pub fn ok(body: impl Into<String>) -> Self {
        Self {
            status: 200,
            body: body.into(),
        }
    }

    pub fn not_found() -> Self {
        Self {
            status: 404,
            body: String::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

/// Connection-level failure (DNS, TLS, timeout). HTTP error statuses are
/// returned as responses, not as errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// One network round trip. Implementations must be usable from several
/// threads at once.
pub trait Transport: Send + Sync {
    fn get(&self, request: &Request) -> Result<Response, TransportError>;
}

/// Network stand-in used when no live transport is compiled in or allowed.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoNetwork;

impl Transport for NoNetwork {
    fn get(&self, request: &Request) -> Result<Response, TransportError> {
        Err(TransportError(format!(
            "network access unavailable for {} (build with the `live` feature)",
            request.url
        )))
    }
}

/// Counts every call before delegating.
pub struct CountingTransport<T> {
    inner: T,
    calls: AtomicUsize,
}

impl<T: Transport> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn get(&self, request: &Request) -> Result<Response, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.get(request)
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, request: &Request) -> Result<Response, TransportError> {
        (**self).get(request)
    }
}

/// Replays recorded documents from `{dir}/{source}/{key}`; a missing file
/// is a 404.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, request: &Request) -> PathBuf {
        self.dir.join(request.source.dir_name()).join(&request.key)
    }
}

impl Transport for FixtureTransport {
    fn get(&self, request: &Request) -> Result<Response, TransportError> {
        match std::fs::read_to_string(self.path_for(request)) {
            Ok(body) => Ok(Response::ok(body)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Response::not_found()),
            Err(e) => Err(TransportError(e.to_string())),
        }
    }
}

/// Scripted responses keyed by URL, for tests. Each URL serves its queue in
/// order and repeats the last response once the queue is drained.
type Script = Vec<(String, Vec<Result<Response, TransportError>>)>;

#[derive(Debug, Default)]
pub struct ScriptedTransport {
    script: Mutex<Script>,
}

impl ScriptedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on(self, url: &str, responses: Vec<Result<Response, TransportError>>) -> Self {
        self.script.lock().expect("script lock").push((url.to_string(), responses));
        self
    }
}

impl Transport for ScriptedTransport {
    fn get(&self, request: &Request) -> Result<Response, TransportError> {
        let mut script = self.script.lock().expect("script lock");
        let Some((_, queue)) = script.iter_mut().find(|(u, _)| *u == request.url) else {
            return Ok(Response::not_found());
        };
        if queue.len() > 1 {
            queue.remove(0)
        } else {
            queue.first().cloned().unwrap_or_else(|| Ok(Response::not_found()))
        }
    }
}

#[cfg(feature = "live")]
pub use live::HttpTransport;

#[cfg(feature = "live")]
mod live {
    use super::*;

    /// Blocking HTTPS transport.
    pub struct HttpTransport {
        agent: ureq::Agent,
    }

    impl HttpTransport {
        pub fn new(timeout: Duration) -> Self {
            let agent = ureq::Agent::config_builder()
                .http_status_as_error(false)
                .timeout_global(Some(timeout))
                .user_agent(concat!("rankguard/", env!("CARGO_PKG_VERSION")))
                .build()
                .into();
            Self { agent }
        }
    }

    impl Default for HttpTransport {
        fn default() -> Self {
            Self::new(Duration::from_secs(30))
        }
    }

    impl Transport for HttpTransport {
        fn get(&self, request: &Request) -> Result<Response, TransportError> {
            let mut call = self.agent.get(&request.url);
            for (name, value) in &request.headers {
                call = call.header(name, value);
            }
            let mut resp = call.call().map_err(|e| TransportError(e.to_string()))?;
            let status = resp.status().as_u16();
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| TransportError(e.to_string()))?;
            Ok(Response { status, body })
        }
    }
}

/// Time source for rate limiting and backoff.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: std::time::Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: std::time::Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Clock that only advances when slept on.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for VirtualClock {
    fn elapsed(&self) -> Duration {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, d: Duration) {
        *self.now.lock().expect("clock lock") += d;
    }
}

impl<C: Clock + ?Sized> Clock for std::sync::Arc<C> {
    fn elapsed(&self) -> Duration {
        (**self).elapsed()
    }

    fn sleep(&self, d: Duration) {
        (**self).sleep(d)
    }
}

/// Spaces requests at least `1/rate` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Duration>>,
}

impl RateLimiter {
    /// `per_second <= 0` disables limiting.
    pub fn new(per_second: f64) -> Self {
        let interval = if per_second > 0.0 {
            Duration::from_secs_f64(1.0 / per_second)
        } else {
            Duration::ZERO
        };
        Self {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    /// Blocks (on `clock`) until the next request may go out.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut slot = self.next_slot.lock().expect("limiter lock");
        let now = clock.elapsed();
        let start = match *slot {
            Some(next) if next > now => {
                clock.sleep(next - now);
                next
            }
            _ => now,
        };
        *slot = Some(start + self.interval);
    }
}
