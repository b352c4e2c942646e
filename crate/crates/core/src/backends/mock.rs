//! Deterministic in-process backends for tests, demos and offline runs.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{BackendError, Embedder, EmbeddingVector, Forecaster, GenerationRequest, Simulator};
use crate::conversation::Turn;

/// Hex SHA-256 of the role-tagged message sequence of a context.
pub fn context_digest(context: &[Turn]) -> String {
    let mut hasher = Sha256::new();
    for turn in context {
        for m in &turn.messages {
            hasher.update(turn.role.as_str().as_bytes());
            hasher.update([0x1f]);
            hasher.update(m.text.as_bytes());
            hasher.update([0x1e]);
        }
    }
    hex::encode(hasher.finalize())
}

fn request_seed(request: &GenerationRequest<'_>) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(context_digest(request.context).as_bytes());
    hasher.update(request.params.seed.unwrap_or(0).to_le_bytes());
    hasher.update(request.params.temperature.to_bits().to_le_bytes());
    hasher.update((request.params.max_tokens as u64).to_le_bytes());
    hasher.update((request.count as u64).to_le_bytes());
    hasher.update(request.attempt.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Draws replies uniformly with replacement from a fixed pool. The draw is a
/// pure function of the context, the sampling parameters and the attempt.
#[derive(Debug, Clone)]
pub struct TemplateSimulator {
    id: String,
    pool: Vec<String>,
}

impl TemplateSimulator {
    pub fn new(id: impl Into<String>, pool: Vec<String>) -> Self {
        assert!(!pool.is_empty(), "template pool must not be empty");
        Self { id: id.into(), pool }
    }
}

impl Simulator for TemplateSimulator {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(request_seed(request));
        Ok((0..request.count)
            .map(|_| self.pool.choose(&mut rng).expect("pool is non-empty").clone())
            .collect())
    }
}

/// Returns the same replies on every call (or only on the first, with [`FixedSimulator::once`]).
#[derive(Debug, Clone)]
pub struct FixedSimulator {
    id: String,
    replies: Vec<String>,
    first_attempt_only: bool,
}

impl FixedSimulator {
    pub fn new(id: impl Into<String>, replies: Vec<String>) -> Self {
        Self {
            id: id.into(),
            replies,
            first_attempt_only: false,
        }
    }

    pub fn once(mut self) -> Self {
        self.first_attempt_only = true;
        self
    }
}

impl Simulator for FixedSimulator {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        if self.first_attempt_only && request.attempt > 0 {
            return Ok(Vec::new());
        }
        Ok(self.replies.iter().take(request.count).cloned().collect())
    }
}

#[derive(Debug, Clone)]
pub struct ConstantForecaster {
    probability: f64,
}

impl ConstantForecaster {
    pub fn new(probability: f64) -> Self {
        Self { probability }
    }
}

impl Forecaster for ConstantForecaster {
    fn id(&self) -> &str {
        "constant"
    }

    fn predict(&self, _context: &[Turn]) -> Result<f64, BackendError> {
        Ok(self.probability)
    }
}

/// Looks contexts up by [`context_digest`], falling back to a default.
#[derive(Debug, Clone)]
pub struct TableForecaster {
    id: String,
    table: HashMap<String, f64>,
    default: f64,
}

impl TableForecaster {
    pub fn new(id: impl Into<String>, default: f64) -> Self {
        Self {
            id: id.into(),
            table: HashMap::new(),
            default,
        }
    }

    pub fn with_context(mut self, context: &[Turn], probability: f64) -> Self {
        self.table.insert(context_digest(context), probability);
        self
    }

    pub fn with_digest(mut self, digest: impl Into<String>, probability: f64) -> Self {
        self.table.insert(digest.into(), probability);
        self
    }
}

impl Forecaster for TableForecaster {
    fn id(&self) -> &str {
        &self.id
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        Ok(*self.table.get(&context_digest(context)).unwrap_or(&self.default))
    }
}

type PredictFn = dyn Fn(&[Turn]) -> Result<f64, BackendError> + Send + Sync;

/// Forecaster backed by a closure.
#[derive(Clone)]
pub struct FnForecaster {
    id: String,
    f: Arc<PredictFn>,
}

impl FnForecaster {
    pub fn new<F>(id: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[Turn]) -> Result<f64, BackendError> + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            f: Arc::new(f),
        }
    }
}

impl std::fmt::Debug for FnForecaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnForecaster").field("id", &self.id).finish()
    }
}

impl Forecaster for FnForecaster {
    fn id(&self) -> &str {
        &self.id
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        (self.f)(context)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Feature-hashing bag-of-words embedder producing unit vectors.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    id: String,
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "embedding dimension must be at least 2");
        Self {
            id: format!("hashing-{dim}"),
            dim,
        }
    }

    fn vector(&self, text: &str) -> EmbeddingVector {
        let lower = text.to_lowercase();
        let mut tokens: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            tokens.push(lower.trim());
        }
        let mut values = vec![0.0; self.dim];
        for token in tokens {
            let h = fnv1a(token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector::new(values)
    }
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Backend that is always down.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnavailableBackend;

impl Simulator for UnavailableBackend {
    fn id(&self) -> &str {
        "unavailable"
    }

    fn generate(&self, _request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        Err(BackendError::Unavailable("backend is down".into()))
    }
}

impl Forecaster for UnavailableBackend {
    fn id(&self) -> &str {
        "unavailable"
    }

    fn predict(&self, _context: &[Turn]) -> Result<f64, BackendError> {
        Err(BackendError::Unavailable("backend is down".into()))
    }
}

impl Embedder for UnavailableBackend {
    fn id(&self) -> &str {
        "unavailable"
    }

    fn embed_texts(&self, _texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        Err(BackendError::Unavailable("backend is down".into()))
    }
}
