#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pivot_core::analysis::Backends;
use pivot_core::backends::{BackendError, FnForecaster, GenerationRequest, RetryPolicy, Simulator, SimulatorParams, TemplateSimulator};
use pivot_core::conversation::{Role, Turn};
use pivot_service::{router, SessionStore, StoreConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

pub fn template() -> TemplateSimulator {
    TemplateSimulator::new(
        "tmpl",
        [
            "I hear you.",
            "That sounds really hard.",
            "What has helped before?",
            "You should sleep.",
            "Tell me more about tonight.",
            "Okay.",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    )
}

/// Deterministic probability from the responder text in the context.
pub fn length_forecaster() -> FnForecaster {
    FnForecaster::new("len", |context: &[Turn]| {
        let responder: usize = context
            .iter()
            .filter(|t| t.role == Role::Responder)
            .map(|t| t.text().len())
            .sum();
        let seeker: usize = context.iter().filter(|t| t.role == Role::Seeker).map(|t| t.text().len()).sum();
        Ok(((responder * 7 + seeker * 3) % 89) as f64 / 100.0 + 0.05)
    })
}

pub fn mock_backends() -> Backends {
    Backends {
        simulator: Arc::new(template()),
        forecaster: Arc::new(length_forecaster()),
        embedder: None,
    }
}

pub fn config() -> StoreConfig {
    StoreConfig {
        params: SimulatorParams {
            n: 10,
            seed: Some(5),
            ..SimulatorParams::default()
        },
        retry: RetryPolicy {
            max_retries: 1,
            base_delay_ms: 0,
        },
        workers: 4,
        ..StoreConfig::default()
    }
}

#[derive(Default)]
pub struct Gate {
    open: std::sync::Mutex<bool>,
    cv: std::sync::Condvar,
}

impl Gate {
    pub fn open(&self) {
        *self.open.lock().unwrap() = true;
        self.cv.notify_all();
    }

    fn wait(&self) {
        let mut open = self.open.lock().unwrap();
        while !*open {
            open = self.cv.wait(open).unwrap();
        }
    }
}

/// Simulator that holds every request until the gate opens.
pub struct Gated(pub Arc<Gate>);

impl Simulator for Gated {
    fn id(&self) -> &str {
        "gated"
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        self.0.wait();
        template().generate(request)
    }
}

/// Unavailable for the first `failures` calls, then delegates to the template pool.
pub struct Flaky {
    pub failures: usize,
    pub calls: AtomicUsize,
}

impl Simulator for Flaky {
    fn id(&self) -> &str {
        "flaky"
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) < self.failures {
            return Err(BackendError::Unavailable("down for maintenance".into()));
        }
        template().generate(request)
    }
}

pub struct Harness {
    pub store: Arc<SessionStore>,
    pub app: Router,
    runtime: tokio::runtime::Runtime,
}

impl Harness {
    pub fn new(backends: Backends, config: StoreConfig, token: Option<&str>) -> Self {
        let store = Arc::new(SessionStore::open(backends, config).expect("store opens"));
        let app = router(store.clone(), token.map(String::from));
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        Self { store, app, runtime }
    }

    pub fn mock() -> Self {
        Self::new(mock_backends(), config(), None)
    }

    pub fn request(&self, method: &str, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value) {
        let mut builder = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            builder = builder.header("authorization", format!("Bearer {t}"));
        }
        let body = match body {
            Some(v) => {
                builder = builder.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let request = builder.body(body).unwrap();
        self.runtime.block_on(async {
            let response = self.app.clone().oneshot(request).await.unwrap();
            let status = response.status();
            let bytes = response.into_body().collect().await.unwrap().to_bytes();
            let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
            (status, value)
        })
    }

    pub fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.request(method, uri, body, None)
    }

    pub fn create(&self, calibration: Value) -> String {
        let (status, body) = self.call("POST", "/sessions", Some(json!({ "calibration": calibration })));
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    pub fn say(&self, id: &str, role: &str, text: &str) -> Value {
        let (status, body) = self.call(
            "POST",
            &format!("/sessions/{id}/utterances"),
            Some(json!({ "role": role, "text": text })),
        );
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        body
    }

    pub fn moments(&self, id: &str) -> Value {
        let (status, body) = self.call("GET", &format!("/sessions/{id}/moments"), None);
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }

    /// Polls until no moment is Pending.
    pub fn settle(&self, id: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(10);
        loop {
            let body = self.moments(id);
            let pending = body["moments"].as_array().unwrap().iter().any(|m| m["status"] == "pending");
            if !pending {
                return body;
            }
            assert!(Instant::now() < deadline, "moments never settled: {body}");
            std::thread::sleep(Duration::from_millis(2));
        }
    }
}

pub fn error_code(body: &Value) -> &str {
    body["error"]["code"].as_str().unwrap_or("<none>")
}
