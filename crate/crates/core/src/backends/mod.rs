//! Simulator, forecaster and embedding backends.
//!
//! Backends are trait objects so that the scoring code is agnostic to whether
//! replies come from an OpenAI-compatible server, a deterministic mock, or the
//! synthetic oracle world. The free functions [`simulate`], [`forecast`] and
//! [`embed`] wrap a backend with the contract checks (sample thresholds,
//! probability clamping, dimension agreement) shared by every implementation.

mod cache;
mod http;
mod mock;

pub use cache::{CacheKey, CachedEmbedder, CachedForecaster, CachedSimulator, DiskCache};
pub use http::{
    render_chat_messages, ChatChoice, ChatCompletionRequest, ChatCompletionResponse, ChatMessage, EmbedRequest,
    EmbedResponse, ForecastRequest, ForecastResponse, HttpConfig, HttpEmbedder, HttpForecaster, OpenAiSimulator,
    WireUtterance,
};
pub use mock::{
    context_digest, ConstantForecaster, FixedSimulator, FnForecaster, HashingEmbedder, TableForecaster,
    TemplateSimulator, UnavailableBackend,
};

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conversation::{Moment, Turn};

/// Raw probabilities may overshoot [0, 1] by at most this much before being rejected.
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("too few samples: got {got}, needed {needed}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("malformed backend reply: {0}")]
    MalformedReply(String),
    #[error("probability {0} outside [0, 1]")]
    OutOfRangeProbability(f64),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid simulator parameters: {0}")]
    InvalidParams(String),
}

impl BackendError {
    /// Whether retrying the same request later could succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::Unavailable(_) | BackendError::TooFewSamples { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorParams {
    pub n: usize,
    pub temperature: f64,
    pub max_tokens: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    pub min_samples: usize,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        Self {
            n: 10,
            temperature: 0.8,
            max_tokens: 60,
            seed: None,
            min_samples: 5,
        }
    }
}

impl SimulatorParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::InvalidParams(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be at least 1");
        }
        if self.min_samples == 0 || self.min_samples > self.n {
            return bad("min_samples must be in 1..=n");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSet {
    pub conversation_id: String,
    pub k: usize,
    pub responses: Vec<String>,
    pub params: SimulatorParams,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub probability: f64,
    pub backend_id: String,
}

impl Forecast {
    /// Clamps float noise into [0, 1]; anything further out is an error.
    pub fn from_raw(raw: f64, backend_id: impl Into<String>) -> Result<Self, BackendError> {
        if !raw.is_finite() || !(-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&raw) {
            return Err(BackendError::OutOfRangeProbability(raw));
        }
        Ok(Self {
            probability: raw.clamp(0.0, 1.0),
            backend_id: backend_id.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One batch request to a simulator. `attempt` is 0 for the first request
/// and increments on each retry so seeded backends draw fresh samples.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub context: &'a [Turn],
    pub params: &'a SimulatorParams,
    pub count: usize,
    pub attempt: u32,
}

pub trait Simulator: Send + Sync {
    fn id(&self) -> &str;
    /// Up to `request.count` candidate responder replies. Empty strings count as failed samples.
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError>;
}

pub trait Forecaster: Send + Sync {
    fn id(&self) -> &str;
    /// Raw outcome probability for a context; [`forecast`] validates it.
    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError>;
}

pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError>;
}

impl<S: Simulator + ?Sized> Simulator for Arc<S> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        (**self).generate(request)
    }
}

impl<F: Forecaster + ?Sized> Forecaster for Arc<F> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        (**self).predict(context)
    }
}

impl<E: Embedder + ?Sized> Embedder for Arc<E> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        (**self).embed_texts(texts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_delay_ms: 200,
        }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self {
            max_retries: 2,
            base_delay_ms: 0,
        }
    }

    fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << retry.min(16)))
    }
}

/// Samples candidate replies for a moment, retrying missing samples.
pub fn simulate(
    simulator: &dyn Simulator,
    moment: &Moment,
    params: &SimulatorParams,
    retry: &RetryPolicy,
) -> Result<SimulationSet, BackendError> {
    params.validate()?;
    if moment.context.is_empty() {
        return Err(BackendError::InvalidInput("empty context".into()));
    }
    let mut responses: Vec<String> = Vec::with_capacity(params.n);
    let mut last_error = None;
    for attempt in 0..=retry.max_retries {
        if responses.len() >= params.n {
            break;
        }
        if attempt > 0 {
            std::thread::sleep(retry.delay(attempt - 1));
        }
        let request = GenerationRequest {
            context: &moment.context,
            params,
            count: params.n - responses.len(),
            attempt,
        };
        match simulator.generate(&request) {
            Ok(batch) => {
                let room = params.n - responses.len();
                responses.extend(batch.into_iter().filter(|r| !r.trim().is_empty()).take(room));
            }
            Err(e @ BackendError::MalformedReply(_)) | Err(e @ BackendError::Unavailable(_)) => {
                last_error = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    if responses.len() < params.min_samples {
        return Err(match last_error {
            Some(e @ BackendError::Unavailable(_)) if responses.is_empty() => e,
            _ => BackendError::TooFewSamples {
                got: responses.len(),
                needed: params.min_samples,
            },
        });
    }
    Ok(SimulationSet {
        conversation_id: moment.conversation_id.clone(),
        k: moment.k,
        responses,
        params: params.clone(),
        backend_id: simulator.id().to_string(),
    })
}

pub fn forecast(forecaster: &dyn Forecaster, context: &[Turn]) -> Result<Forecast, BackendError> {
    if context.is_empty() {
        return Err(BackendError::InvalidInput("empty context".into()));
    }
    Forecast::from_raw(forecaster.predict(context)?, forecaster.id())
}

/// Pins the embedding dimension for one run; the first successful call sets it.
#[derive(Debug, Default)]
pub struct DimensionLock(OnceLock<usize>);

impl DimensionLock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> Option<usize> {
        self.0.get().copied()
    }

    fn check(&self, got: usize) -> Result<(), BackendError> {
        let expected = *self.0.get_or_init(|| got);
        if expected != got {
            return Err(BackendError::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

pub fn embed(embedder: &dyn Embedder, texts: &[String], lock: &DimensionLock) -> Result<Vec<EmbeddingVector>, BackendError> {
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(BackendError::InvalidInput(format!("text {i} is empty")));
    }
    let vectors = embedder.embed_texts(texts)?;
    if vectors.len() != texts.len() {
        return Err(BackendError::MalformedReply(format!(
            "expected {} vectors, got {}",
            texts.len(),
            vectors.len()
        )));
    }
    for v in &vectors {
        if v.dim() < 2 {
            return Err(BackendError::MalformedReply(format!("embedding dimension {} < 2", v.dim())));
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(BackendError::MalformedReply("non-finite embedding entry".into()));
        }
        lock.check(v.dim())?;
    }
    Ok(vectors)
}

/// Context with `reply` appended as a responder turn.
pub fn extend_with_reply(context: &[Turn], reply: &str) -> Vec<Turn> {
    use crate::conversation::{Role, Utterance};
    let ts = context.last().and_then(Turn::last_timestamp).unwrap_or(0);
    let message = Utterance::new("simulated", Role::Responder, reply, ts);
    let mut out = context.to_vec();
    match out.last_mut() {
        Some(last) if last.role == Role::Responder => last.messages.push(message),
        _ => {
            let index = out.len();
            out.push(Turn {
                role: Role::Responder,
                messages: vec![message],
                index,
            });
        }
    }
    out
}
