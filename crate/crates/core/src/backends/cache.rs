//! Content-addressed, persistent result cache.
//!
//! Entries live at `<dir>/<2 hex>/<64 hex>.json` and hold `{"key", "value"}`.
//! Writes go to a temporary file which is then hard-linked into place, so the
//! first writer of a key wins and concurrent losers read back the winner.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::http::ForecastRequest;
use super::{BackendError, Embedder, EmbeddingVector, Forecaster, GenerationRequest, Simulator};
use crate::conversation::Turn;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub digest: String,
}

impl CacheKey {
    /// Parameters are canonicalised through `serde_json::Value`, whose maps are key-sorted.
    pub fn new<P: Serialize>(backend_id: &str, operation: &str, params: &P, context_text: &str) -> Self {
        let canonical = serde_json::to_value(params)
            .and_then(|v| serde_json::to_string(&v))
            .expect("cache parameters serialize to JSON");
        let mut hasher = Sha256::new();
        for part in [backend_id, operation, canonical.as_str(), context_text] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        Self {
            digest: hex::encode(hasher.finalize()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    key: String,
    value: T,
}

#[derive(Debug)]
pub struct DiskCache {
    dir: PathBuf,
    counter: AtomicU64,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(&key.digest[..2]).join(format!("{}.json", key.digest))
    }

    /// `None` on a miss. Corrupt entries are logged, removed and reported as misses.
    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let path = self.path_for(key);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice::<Entry<T>>(&bytes) {
            Ok(entry) if entry.key == key.digest => Some(entry.value),
            _ => {
                log::warn!("cache entry {} is corrupt; recomputing", key.digest);
                let _ = fs::remove_file(&path);
                None
            }
        }
    }

    /// Stores `value` unless another writer got there first; returns whichever value is stored.
    pub fn put<T: Serialize + DeserializeOwned + Clone>(&self, key: &CacheKey, value: &T) -> T {
        match self.try_put(key, value) {
            Ok(stored) => stored,
            Err(e) => {
                log::warn!("cache write for {} failed: {e}", key.digest);
                value.clone()
            }
        }
    }

    fn try_put<T: Serialize + DeserializeOwned + Clone>(&self, key: &CacheKey, value: &T) -> std::io::Result<T> {
        let path = self.path_for(key);
        let shard = path.parent().expect("entry path has a shard directory");
        fs::create_dir_all(shard)?;
        let bytes = serde_json::to_vec(&Entry {
            key: key.digest.clone(),
            value,
        })
        .map_err(std::io::Error::other)?;
        let tmp = shard.join(format!(
            ".{}.{}.{}.tmp",
            key.digest,
            std::process::id(),
            self.counter.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        let linked = fs::hard_link(&tmp, &path);
        let result = match linked {
            Ok(()) => Ok(value.clone()),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => match self.get::<T>(key) {
                Some(existing) => Ok(existing),
                None => fs::rename(&tmp, &path).map(|_| value.clone()),
            },
            Err(e) => Err(e),
        };
        let _ = fs::remove_file(&tmp);
        result
    }

    pub fn get_or_compute<T, F>(&self, key: &CacheKey, compute: F) -> Result<T, BackendError>
    where
        T: Serialize + DeserializeOwned + Clone,
        F: FnOnce() -> Result<T, BackendError>,
    {
        if let Some(hit) = self.get(key) {
            return Ok(hit);
        }
        let value = compute()?;
        Ok(self.put(key, &value))
    }
}

fn context_text(context: &[Turn]) -> String {
    serde_json::to_string(&ForecastRequest::from_context(context)).expect("context serializes")
}

/// Replays the first observed batch for each (context, parameters, attempt).
pub struct CachedSimulator<S> {
    inner: S,
    cache: Arc<DiskCache>,
}

impl<S: Simulator> CachedSimulator<S> {
    pub fn new(inner: S, cache: Arc<DiskCache>) -> Self {
        Self { inner, cache }
    }
}

#[derive(Serialize)]
struct GenerationKey<'a> {
    params: &'a super::SimulatorParams,
    count: usize,
    attempt: u32,
}

impl<S: Simulator> Simulator for CachedSimulator<S> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let key = CacheKey::new(
            self.inner.id(),
            "simulate",
            &GenerationKey {
                params: request.params,
                count: request.count,
                attempt: request.attempt,
            },
            &context_text(request.context),
        );
        self.cache.get_or_compute(&key, || self.inner.generate(request))
    }
}

pub struct CachedForecaster<F> {
    inner: F,
    cache: Arc<DiskCache>,
}

impl<F: Forecaster> CachedForecaster<F> {
    pub fn new(inner: F, cache: Arc<DiskCache>) -> Self {
        Self { inner, cache }
    }
}

impl<F: Forecaster> Forecaster for CachedForecaster<F> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        let key = CacheKey::new(self.inner.id(), "forecast", &(), &context_text(context));
        self.cache.get_or_compute(&key, || self.inner.predict(context))
    }
}

pub struct CachedEmbedder<E> {
    inner: E,
    cache: Arc<DiskCache>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, cache: Arc<DiskCache>) -> Self {
        Self { inner, cache }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        let joined = serde_json::to_string(texts).expect("texts serialize");
        let key = CacheKey::new(self.inner.id(), "embed", &(), &joined);
        self.cache.get_or_compute(&key, || self.inner.embed_texts(texts))
    }
}
