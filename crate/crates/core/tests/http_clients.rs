//! HTTP clients against a local in-process server.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use pivot_core::backends::{
    forecast, simulate, BackendError, ChatChoice, ChatCompletionRequest, ChatCompletionResponse, ChatMessage,
    EmbedRequest, EmbedResponse, Embedder, ForecastRequest, ForecastResponse, HttpConfig, HttpEmbedder,
    HttpForecaster, OpenAiSimulator, RetryPolicy, SimulatorParams,
};
use pivot_core::conversation::{Moment, Role, Turn, Utterance};

#[derive(Default)]
struct Counters {
    chat: AtomicUsize,
    flaky: AtomicUsize,
}

fn authorized(headers: &HeaderMap) -> bool {
    headers.get("authorization").and_then(|v| v.to_str().ok()) == Some("Bearer sekrit")
}

async fn chat(
    State(counters): State<Arc<Counters>>,
    headers: HeaderMap,
    Json(body): Json<ChatCompletionRequest>,
) -> Result<Json<ChatCompletionResponse>, StatusCode> {
    if !authorized(&headers) {
        return Err(StatusCode::UNAUTHORIZED);
    }
    counters.chat.fetch_add(1, Ordering::SeqCst);
    let last = body.messages.last().map(|m| m.content.clone()).unwrap_or_default();
    let choices = (0..body.n)
        .map(|i| ChatChoice {
            index: i,
            message: ChatMessage {
                role: "assistant".into(),
                content: format!(" reply {i} to {last} ({}) ", body.messages[0].role),
            },
        })
        .collect();
    Ok(Json(ChatCompletionResponse { choices }))
}

/// Returns at most two choices per call, so the client has to top up.
async fn stingy_chat(Json(body): Json<ChatCompletionRequest>) -> Json<ChatCompletionResponse> {
    let seed = body.seed.unwrap_or(0);
    let choices = (0..body.n.min(2))
        .map(|i| ChatChoice {
            index: i,
            message: ChatMessage {
                role: "assistant".into(),
                content: format!("seed {seed} choice {i}"),
            },
        })
        .collect();
    Json(ChatCompletionResponse { choices })
}

async fn flaky_chat(State(counters): State<Arc<Counters>>, Json(body): Json<ChatCompletionRequest>) -> Result<Json<ChatCompletionResponse>, StatusCode> {
    if counters.flaky.fetch_add(1, Ordering::SeqCst) == 0 {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    Ok(stingy_chat(Json(ChatCompletionRequest { n: body.n, ..body })).await)
}

async fn forecast_handler(Json(body): Json<ForecastRequest>) -> Json<ForecastResponse> {
    let seeker = body.utterances.iter().filter(|u| u.role == Role::Seeker).count();
    Json(ForecastResponse {
        probability: (0.1 * body.utterances.len() as f64 + 0.01 * seeker as f64).min(1.0),
    })
}

async fn embed_handler(Json(body): Json<EmbedRequest>) -> Json<EmbedResponse> {
    Json(EmbedResponse {
        vectors: body.texts.iter().map(|t| vec![t.len() as f64, 1.0, 0.5]).collect(),
    })
}

fn spawn_server() -> (SocketAddr, Arc<Counters>) {
    let counters = Arc::new(Counters::default());
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/stingy/chat/completions", post(stingy_chat))
        .route("/flaky/chat/completions", post(flaky_chat))
        .route("/forecast", post(forecast_handler))
        .route("/embed", post(embed_handler))
        .route("/down/forecast", post(|| async { StatusCode::SERVICE_UNAVAILABLE }))
        .route("/limited/forecast", post(|| async { StatusCode::TOO_MANY_REQUESTS }))
        .route("/bad/forecast", post(|| async { StatusCode::BAD_REQUEST }))
        .route("/garbled/forecast", post(|| async { "not json" }))
        .route("/oob/forecast", post(|| async { Json(ForecastResponse { probability: 1.5 }) }))
        .with_state(counters.clone());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let runtime = tokio::runtime::Runtime::new().unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), counters)
}

fn turn(role: Role, text: &str, index: usize) -> Turn {
    Turn {
        role,
        messages: vec![Utterance::new(role.as_str(), role, text, index as u64)],
        index,
    }
}

fn moment() -> Moment {
    Moment {
        conversation_id: "c".into(),
        k: 2,
        context: vec![
            turn(Role::Seeker, "hi", 0),
            turn(Role::Responder, "hello, I'm here", 1),
            turn(Role::Seeker, "rough night", 2),
        ],
    }
}

fn config(addr: SocketAddr, path: &str) -> HttpConfig {
    HttpConfig {
        url: format!("http://{addr}{path}"),
        api_key: Some("sekrit".into()),
        timeout_ms: 5_000,
    }
}

#[test]
fn simulator_round_trip() {
    let (addr, counters) = spawn_server();
    let sim = OpenAiSimulator::new(config(addr, "/v1/"), "tiny", Some("You are a counselor.".into())).unwrap();
    let params = SimulatorParams {
        n: 4,
        min_samples: 4,
        ..SimulatorParams::default()
    };
    let set = simulate(&sim, &moment(), &params, &RetryPolicy::immediate()).unwrap();
    assert_eq!(set.responses.len(), 4);
    assert_eq!(set.responses[0], "reply 0 to rough night (system)");
    assert_eq!(counters.chat.load(Ordering::SeqCst), 1);
    assert!(set.backend_id.contains("tiny"));
}

#[test]
fn missing_key_is_not_retried_as_transient() {
    let (addr, _) = spawn_server();
    let mut cfg = config(addr, "/v1");
    cfg.api_key = None;
    let sim = OpenAiSimulator::new(cfg, "tiny", None).unwrap();
    let err = simulate(&sim, &moment(), &SimulatorParams::default(), &RetryPolicy::immediate()).unwrap_err();
    assert_eq!(err, BackendError::TooFewSamples { got: 0, needed: 5 });
}

#[test]
fn simulator_tops_up_short_batches() {
    let (addr, _) = spawn_server();
    let sim = OpenAiSimulator::new(config(addr, "/stingy"), "tiny", None).unwrap();
    let params = SimulatorParams {
        n: 5,
        min_samples: 5,
        seed: Some(10),
        ..SimulatorParams::default()
    };
    let retry = RetryPolicy {
        max_retries: 4,
        base_delay_ms: 0,
    };
    let set = simulate(&sim, &moment(), &params, &retry).unwrap();
    assert_eq!(
        set.responses,
        ["seed 10 choice 0", "seed 10 choice 1", "seed 11 choice 0", "seed 11 choice 1", "seed 12 choice 0"]
    );
    // Too few attempts to reach the minimum.
    let err = simulate(&sim, &moment(), &params, &RetryPolicy { max_retries: 1, base_delay_ms: 0 }).unwrap_err();
    assert_eq!(err, BackendError::TooFewSamples { got: 4, needed: 5 });
}

#[test]
fn simulator_recovers_from_outage() {
    let (addr, counters) = spawn_server();
    let sim = OpenAiSimulator::new(config(addr, "/flaky"), "tiny", None).unwrap();
    let params = SimulatorParams {
        n: 2,
        min_samples: 2,
        ..SimulatorParams::default()
    };
    let set = simulate(&sim, &moment(), &params, &RetryPolicy::immediate()).unwrap();
    assert_eq!(set.responses.len(), 2);
    assert_eq!(counters.flaky.load(Ordering::SeqCst), 2);
}

#[test]
fn forecaster_round_trip_and_errors() {
    let (addr, _) = spawn_server();
    let fc = HttpForecaster::new(config(addr, "")).unwrap();
    let p = forecast(&fc, &moment().context).unwrap().probability;
    assert!((p - 0.32).abs() < 1e-12, "{p}");

    let status = |path: &str| forecast(&HttpForecaster::new(config(addr, path)).unwrap(), &moment().context).unwrap_err();
    assert!(matches!(status("/down"), BackendError::Unavailable(_)));
    assert!(matches!(status("/limited"), BackendError::Unavailable(_)));
    assert!(matches!(status("/bad"), BackendError::MalformedReply(_)));
    assert!(matches!(status("/garbled"), BackendError::MalformedReply(_)));
    assert!(matches!(status("/oob"), BackendError::OutOfRangeProbability(_)));
}

#[test]
fn unreachable_server_is_unavailable() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let fc = HttpForecaster::new(HttpConfig {
        timeout_ms: 1_000,
        ..HttpConfig::new(format!("http://{addr}"))
    })
    .unwrap();
    assert!(matches!(forecast(&fc, &moment().context), Err(BackendError::Unavailable(_))));
}

#[test]
fn embedder_round_trip() {
    let (addr, _) = spawn_server();
    let embedder = HttpEmbedder::new(config(addr, "/")).unwrap();
    let vectors = embedder.embed_texts(&["ab".into(), "abcd".into()]).unwrap();
    assert_eq!(vectors.len(), 2);
    assert_eq!(vectors[1].values, vec![4.0, 1.0, 0.5]);
}
