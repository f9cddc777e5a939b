use std::path::{Path, PathBuf};

use super::{IngestError, Response, Source};

const NOT_FOUND_SUFFIX: &str = ".404";

/// Cached outcome of a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheEntry {
    Body(String),
    NotFound,
}

impl CacheEntry {
    pub fn into_response(self) -> Response {
        match self {
            CacheEntry::Body(body) => Response::ok(body),
            CacheEntry::NotFound => Response::not_found(),
        }
    }
}

/// Append-only document cache at `{root}/{source}/{key}`. A negative
/// result is stored as an empty `{key}.404` marker.
#[derive(Debug, Clone)]
pub struct FileCache {
    root: PathBuf,
}

impl FileCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, source: Source, key: &str) -> PathBuf {
        self.root.join(source.dir_name()).join(key)
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
        move |source| IngestError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn read(&self, source: Source, key: &str) -> Result<Option<CacheEntry>, IngestError> {
        let path = self.path(source, key);
        match std::fs::read_to_string(&path) {
            Ok(body) => return Ok(Some(CacheEntry::Body(body))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Self::io(&path)(e)),
        }
        let marker = self.path(source, &format!("{key}{NOT_FOUND_SUFFIX}"));
        Ok(marker.exists().then_some(CacheEntry::NotFound))
    }

    /// Writes through a temporary file and rename so readers never observe
    /// a partial document.
    pub fn write(&self, source: Source, key: &str, response: &Response) -> Result<(), IngestError> {
        let (path, body) = if response.is_success() {
            (self.path(source, key), response.body.as_str())
        } else {
            (self.path(source, &format!("{key}{NOT_FOUND_SUFFIX}")), "")
        };
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(Self::io(dir))?;
        let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, body).map_err(Self::io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(Self::io(&path))
    }
}
