//! HTTP clients for external inference services.
//!
//! * Simulator: an OpenAI-compatible `chat/completions` endpoint. The context
//!   is rendered as alternating chat messages, seeker turns as `user` and
//!   responder turns as `assistant`, so the model continues as the responder.
//! * Forecaster: `POST {base}/forecast` with `{"utterances":[{role,text}]}`,
//!   answering `{"probability": p}`.
//! * Embedder: `POST {base}/embed` with `{"texts":[...]}`, answering
//!   `{"vectors":[[...]]}`.

use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BackendError, Embedder, EmbeddingVector, Forecaster, GenerationRequest, Simulator};
use crate::conversation::{Role, Turn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub url: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

impl HttpConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    fn client(&self) -> Result<Client, BackendError> {
        Client::builder()
            .timeout(Duration::from_millis(self.timeout_ms))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))
    }

    fn endpoint(&self, path: &str) -> String {
        format!("{}/{}", self.url.trim_end_matches('/'), path.trim_start_matches('/'))
    }
}

fn send<T: DeserializeOwned>(request: RequestBuilder, api_key: Option<&str>) -> Result<T, BackendError> {
    let request = match api_key {
        Some(key) => request.bearer_auth(key),
        None => request,
    };
    let response = request
        .send()
        .map_err(|e| BackendError::Unavailable(e.to_string()))?;
    let status = response.status();
    if status.is_server_error() || status.as_u16() == 429 {
        return Err(BackendError::Unavailable(format!("status {status}")));
    }
    if !status.is_success() {
        return Err(BackendError::MalformedReply(format!("status {status}")));
    }
    let body = response
        .bytes()
        .map_err(|e| BackendError::Unavailable(e.to_string()))?;
    serde_json::from_slice(&body).map_err(|e| BackendError::MalformedReply(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatCompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatChoice {
    #[serde(default)]
    pub index: usize,
    pub message: ChatMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatCompletionResponse {
    pub choices: Vec<ChatChoice>,
}

/// Renders a context as chat messages, responder turns in the `assistant` role.
pub fn render_chat_messages(system_prompt: Option<&str>, context: &[Turn]) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(context.len() + 1);
    if let Some(prompt) = system_prompt {
        messages.push(ChatMessage {
            role: "system".into(),
            content: prompt.into(),
        });
    }
    for turn in context {
        let role = match turn.role {
            Role::Seeker => "user",
            Role::Responder => "assistant",
        };
        messages.push(ChatMessage {
            role: role.into(),
            content: turn.text(),
        });
    }
    messages
}

#[derive(Debug, Clone)]
pub struct OpenAiSimulator {
    config: HttpConfig,
    model: String,
    system_prompt: Option<String>,
    id: String,
    client: Client,
}

impl OpenAiSimulator {
    /// `config.url` is the API base, e.g. `http://localhost:8000/v1`.
    pub fn new(config: HttpConfig, model: impl Into<String>, system_prompt: Option<String>) -> Result<Self, BackendError> {
        let model = model.into();
        Ok(Self {
            client: config.client()?,
            id: format!("openai:{model}@{}", config.url),
            config,
            model,
            system_prompt,
        })
    }

    pub fn request_body(&self, request: &GenerationRequest<'_>) -> ChatCompletionRequest {
        ChatCompletionRequest {
            model: self.model.clone(),
            messages: render_chat_messages(self.system_prompt.as_deref(), request.context),
            temperature: request.params.temperature,
            max_tokens: request.params.max_tokens,
            n: request.count,
            seed: request.params.seed.map(|s| s.wrapping_add(request.attempt as u64)),
        }
    }
}

impl Simulator for OpenAiSimulator {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let body = self.request_body(request);
        let builder = self.client.post(self.config.endpoint("chat/completions")).json(&body);
        let response: ChatCompletionResponse = send(builder, self.config.api_key.as_deref())?;
        Ok(response
            .choices
            .into_iter()
            .map(|c| c.message.content.trim().to_string())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireUtterance {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub utterances: Vec<WireUtterance>,
}

impl ForecastRequest {
    pub fn from_context(context: &[Turn]) -> Self {
        Self {
            utterances: context
                .iter()
                .flat_map(|t| {
                    t.messages.iter().map(move |m| WireUtterance {
                        role: t.role,
                        text: m.text.clone(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResponse {
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct HttpForecaster {
    config: HttpConfig,
    id: String,
    client: Client,
}

impl HttpForecaster {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: config.client()?,
            id: format!("forecast@{}", config.url),
            config,
        })
    }
}

impl Forecaster for HttpForecaster {
    fn id(&self) -> &str {
        &self.id
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        let builder = self
            .client
            .post(self.config.endpoint("forecast"))
            .json(&ForecastRequest::from_context(context));
        let response: ForecastResponse = send(builder, self.config.api_key.as_deref())?;
        Ok(response.probability)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    config: HttpConfig,
    id: String,
    client: Client,
}

impl HttpEmbedder {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        Ok(Self {
            client: config.client()?,
            id: format!("embed@{}", config.url),
            config,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        let builder = self.client.post(self.config.endpoint("embed")).json(&EmbedRequest {
            texts: texts.to_vec(),
        });
        let response: EmbedResponse = send(builder, self.config.api_key.as_deref())?;
        Ok(response.vectors.into_iter().map(EmbeddingVector::new).collect())
    }
}
