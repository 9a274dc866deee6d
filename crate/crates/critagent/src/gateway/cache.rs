//! Content-addressed on-disk cache: one file per request digest. Writes go
//! through a temp file + rename so a cache entry is either absent or complete,
//! which is what makes interrupted runs resumable without re-spending API
//! calls.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::GatewayError;
use crate::prompts::hex_digest;

/// Identity of a cacheable provider request: a digest over the provider kind,
/// model, temperature and the prompt/query payload. Nothing else participates,
/// so e.g. retry counts or wall time never change the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CacheKey {
    digest: String,
}

impl CacheKey {
    fn build(kind: &str, model: &str, temperature: f64, payload: &str) -> CacheKey {
        let mut hasher = Sha256::new();
        for part in [kind, model, &temperature.to_string(), payload] {
            hasher.update(part.as_bytes());
            hasher.update([0x1f]);
        }
        CacheKey { digest: hex_digest(hasher) }
    }

    pub fn completion(model: &str, temperature: f64, prompt: &str) -> CacheKey {
        CacheKey::build("completion", model, temperature, prompt)
    }

    pub fn search(query: &str, n: usize) -> CacheKey {
        CacheKey::build("search", "", 0.0, &format!("{n}\u{1f}{query}"))
    }

    pub fn fetch(url: &str) -> CacheKey {
        CacheKey::build("fetch", "", 0.0, url)
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: u64,
    pub bytes: u64,
}

#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<DiskCache, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GatewayError::Cache(e.to_string()))?;
        Ok(DiskCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.digest())
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        fs::read_to_string(self.entry_path(key)).ok()
    }

    pub fn put(&self, key: &CacheKey, value: &str) -> Result<(), GatewayError> {
        let tmp = self.dir.join(format!(".{}.tmp", key.digest()));
        fs::write(&tmp, value).map_err(|e| GatewayError::Cache(e.to_string()))?;
        fs::rename(&tmp, self.entry_path(key)).map_err(|e| GatewayError::Cache(e.to_string()))?;
        Ok(())
    }

    pub fn stats(&self) -> Result<CacheStats, GatewayError> {
        let mut entries = 0;
        let mut bytes = 0;
        let read = fs::read_dir(&self.dir).map_err(|e| GatewayError::Cache(e.to_string()))?;
        for item in read {
            let item = item.map_err(|e| GatewayError::Cache(e.to_string()))?;
            let name = item.file_name();
            if name.to_string_lossy().starts_with('.') {
                continue; // in-flight temp files
            }
            if let Ok(meta) = item.metadata() {
                if meta.is_file() {
                    entries += 1;
                    bytes += meta.len();
                }
            }
        }
        Ok(CacheStats { entries, bytes })
    }
}
