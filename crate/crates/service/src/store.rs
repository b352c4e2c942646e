//! Session state, scoring workers and journal replay.
//!
//! Appends are serialized per session (one mutex each). Scoring jobs go to a
//! pool of worker threads over a channel, so an append never waits on a
//! backend. A seeker turn that grows after being scheduled (a second seeker
//! message before the reply) gets a new revision: the stale job's result is
//! discarded and the longer prefix is scored instead.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use crossbeam_channel::{unbounded, Receiver, Sender};
use parking_lot::{Condvar, Mutex, RwLock};
use pivot_core::analysis::Backends;
use pivot_core::backends::{extend_with_reply, forecast, RetryPolicy, SimulatorParams};
use pivot_core::conversation::{Conversation, Moment, Outcome, Role, Turn, Utterance};
use pivot_core::measures::{compute_piv, discretize, MeasureError, PivLabel, PivotalScore, Thresholds};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::{Journal, JournalEvent};

/// Name accepted in place of a calibration to run without thresholds.
pub const UNCALIBRATED: &str = "uncalibrated";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown calibration {0:?}")]
    UnknownCalibration(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("timestamp {got} is earlier than the last message ({last})")]
    StaleTimestamp { last: u64, got: u64 },
    #[error("the last turn must be a seeker turn")]
    WrongTurn,
    #[error("no moment at k={0}")]
    UnknownMoment(usize),
    #[error("moment k={0} is not ready")]
    NotReady(usize),
    #[error("retry not allowed: {0}")]
    RetryNotAllowed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend error: {message}")]
    Backend { message: String, transient: bool },
    #[error("journal error: {0}")]
    Journal(String),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::UnknownCalibration(_) => "unknown_calibration",
            ServiceError::SessionClosed(_) => "session_closed",
            ServiceError::StaleTimestamp { .. } => "stale_timestamp",
            ServiceError::WrongTurn => "wrong_turn",
            ServiceError::UnknownMoment(_) => "unknown_moment",
            ServiceError::NotReady(_) => "not_ready",
            ServiceError::RetryNotAllowed(_) => "retry_not_allowed",
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::Backend { .. } => "backend_error",
            ServiceError::Journal(_) => "journal_error",
        }
    }
}

fn journal_err(e: std::io::Error) -> ServiceError {
    ServiceError::Journal(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentStatus {
    Pending,
    Ready,
    Failed,
}

/// The thresholds a session labels with, copied in at creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCalibration {
    pub name: Option<String>,
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewUtterance {
    #[serde(default)]
    pub speaker: Option<String>,
    pub role: Role,
    pub text: String,
    #[serde(default)]
    pub timestamp_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendAck {
    pub accepted: bool,
    pub turns: usize,
    pub utterances: usize,
    /// Moment scheduled for scoring by this append, if any.
    pub scheduled: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentView {
    pub k: usize,
    pub status: MomentStatus,
    pub piv: Option<f64>,
    pub label: Option<PivLabel>,
    pub retriable: bool,
    pub error: Option<String>,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsSnapshot {
    pub session_id: String,
    pub status: SessionStatus,
    pub turns: usize,
    pub utterances: usize,
    pub moments: Vec<MomentView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub status: SessionStatus,
    pub created_at_ms: u64,
    pub calibration: SessionCalibration,
    pub turns: usize,
    pub utterances: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResult {
    pub p_before: f64,
    pub p_after: f64,
    /// `p_before − p_after`; positive means the draft improves the forecast.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSample {
    pub response: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationsView {
    pub k: usize,
    pub piv: f64,
    pub n_used: usize,
    pub samples: Vec<SimulationSample>,
}

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub params: SimulatorParams,
    pub retry: RetryPolicy,
    pub workers: usize,
    /// Manual retries allowed per moment after the first attempt fails.
    pub max_manual_retries: u32,
    pub journal_dir: Option<PathBuf>,
    pub calibration_dir: Option<PathBuf>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            params: SimulatorParams::default(),
            retry: RetryPolicy::default(),
            workers: 4,
            max_manual_retries: 2,
            journal_dir: None,
            calibration_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
struct MomentEntry {
    revision: u32,
    status: MomentStatus,
    score: Option<PivotalScore>,
    error: Option<String>,
    retriable: bool,
    attempts: u32,
}

impl MomentEntry {
    fn pending(revision: u32) -> Self {
        Self {
            revision,
            status: MomentStatus::Pending,
            score: None,
            error: None,
            retriable: false,
            attempts: 1,
        }
    }
}

#[derive(Debug)]
struct SessionState {
    id: String,
    created_at_ms: u64,
    status: SessionStatus,
    calibration: SessionCalibration,
    utterances: Vec<Utterance>,
    turns: Vec<Turn>,
    moments: BTreeMap<usize, MomentEntry>,
    journal: Option<Journal>,
}

impl SessionState {
    fn new(id: String, created_at_ms: u64, calibration: SessionCalibration) -> Self {
        Self {
            id,
            created_at_ms,
            status: SessionStatus::Open,
            calibration,
            utterances: Vec::new(),
            turns: Vec::new(),
            moments: BTreeMap::new(),
            journal: None,
        }
    }

    fn record(&mut self, event: &JournalEvent) -> Result<(), ServiceError> {
        match &mut self.journal {
            Some(j) => j.append(event).map_err(journal_err),
            None => Ok(()),
        }
    }

    /// Adds the utterance to the transcript; returns the (k, revision) to score
    /// when the transcript now ends on a seeker turn.
    fn apply(&mut self, utterance: Utterance) -> Option<(usize, u32)> {
        let role = utterance.role;
        self.utterances.push(utterance.clone());
        match self.turns.last_mut() {
            Some(turn) if turn.role == role => turn.messages.push(utterance),
            _ => {
                let index = self.turns.len();
                self.turns.push(Turn {
                    role,
                    messages: vec![utterance],
                    index,
                });
            }
        }
        if role != Role::Seeker {
            return None;
        }
        let k = self.turns.len() - 1;
        let revision = self.moments.get(&k).map_or(0, |e| e.revision + 1);
        self.moments.insert(k, MomentEntry::pending(revision));
        Some((k, revision))
    }

    fn label(&self, value: f64) -> PivLabel {
        match &self.calibration.thresholds {
            Some(t) => discretize(value, t),
            None => PivLabel::Mid,
        }
    }

    fn view(&self, k: usize, e: &MomentEntry) -> MomentView {
        let piv = e.score.as_ref().map(|s| s.value);
        MomentView {
            k,
            status: e.status,
            piv,
            label: piv.map(|v| self.label(v)),
            retriable: e.retriable,
            error: e.error.clone(),
            attempts: e.attempts,
        }
    }

    fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            status: self.status,
            created_at_ms: self.created_at_ms,
            calibration: self.calibration.clone(),
            turns: self.turns.len(),
            utterances: self.utterances.len(),
        }
    }

    fn job(&self, k: usize, revision: u32) -> Job {
        Job {
            session_id: self.id.clone(),
            k,
            revision,
            context: self.turns[..=k].to_vec(),
        }
    }
}

struct Job {
    session_id: String,
    k: usize,
    revision: u32,
    context: Vec<Turn>,
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    named_calibrations: RwLock<HashMap<String, Thresholds>>,
    backends: Backends,
    config: StoreConfig,
    jobs: Mutex<Option<Sender<Job>>>,
    in_flight: Mutex<usize>,
    idle: Condvar,
}

impl Inner {
    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, ServiceError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn enqueue(&self, job: Job) {
        let sender = self.jobs.lock();
        if let Some(tx) = sender.as_ref() {
            *self.in_flight.lock() += 1;
            if tx.send(job).is_err() {
                self.finish_job();
            }
        }
    }

    fn finish_job(&self) {
        let mut n = self.in_flight.lock();
        *n = n.saturating_sub(1);
        if *n == 0 {
            self.idle.notify_all();
        }
    }

    fn run(&self, job: Job) {
        let moment = Moment {
            conversation_id: job.session_id.clone(),
            k: job.k,
            context: job.context,
        };
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            compute_piv(
                &moment,
                self.backends.simulator.as_ref(),
                self.backends.forecaster.as_ref(),
                &self.config.params,
                &self.config.retry,
            )
        }))
        .unwrap_or_else(|_| Err(MeasureError::Backend(pivot_core::BackendError::Unavailable("scoring panicked".into()))));
        if let Err(e) = self.complete(&job.session_id, job.k, job.revision, result) {
            log::error!("session {}: could not record moment {}: {e}", job.session_id, job.k);
        }
    }

    fn complete(&self, id: &str, k: usize, revision: u32, result: Result<PivotalScore, MeasureError>) -> Result<(), ServiceError> {
        let session = self.session(id)?;
        let mut state = session.lock();
        match state.moments.get(&k) {
            Some(e) if e.revision == revision && e.status == MomentStatus::Pending => {}
            _ => return Ok(()), // superseded
        }
        match result {
            Ok(score) => {
                state.record(&JournalEvent::Scored {
                    k,
                    revision,
                    score: score.clone(),
                })?;
                let entry = state.moments.get_mut(&k).expect("checked above");
                entry.status = MomentStatus::Ready;
                entry.score = Some(score);
                entry.error = None;
                entry.retriable = false;
            }
            Err(e) => {
                log::warn!("session {id}: scoring k={k} failed: {e}");
                let entry = state.moments.get_mut(&k).expect("checked above");
                entry.status = MomentStatus::Failed;
                entry.retriable = e.is_transient();
                entry.error = Some(e.to_string());
            }
        }
        Ok(())
    }
}

fn worker_loop(inner: Arc<Inner>, jobs: Receiver<Job>) {
    while let Ok(job) = jobs.recv() {
        inner.run(job);
        inner.finish_job();
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn valid_calibration_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Thread-safe registry of live sessions plus the scoring worker pool.
pub struct SessionStore {
    inner: Arc<Inner>,
    workers: Vec<JoinHandle<()>>,
}

impl SessionStore {
    /// Starts the workers and replays any journals found in `config.journal_dir`.
    pub fn open(backends: Backends, config: StoreConfig) -> Result<Self, ServiceError> {
        if let Some(dir) = &config.journal_dir {
            std::fs::create_dir_all(dir).map_err(journal_err)?;
        }
        let (tx, rx) = unbounded();
        let n_workers = config.workers.max(1);
        let inner = Arc::new(Inner {
            sessions: RwLock::new(HashMap::new()),
            named_calibrations: RwLock::new(HashMap::new()),
            backends,
            config,
            jobs: Mutex::new(Some(tx)),
            in_flight: Mutex::new(0),
            idle: Condvar::new(),
        });
        let workers = (0..n_workers)
            .map(|i| {
                let inner = inner.clone();
                let rx = rx.clone();
                std::thread::Builder::new()
                    .name(format!("pivot-scorer-{i}"))
                    .spawn(move || worker_loop(inner, rx))
                    .expect("spawn scoring worker")
            })
            .collect();
        let store = Self { inner, workers };
        store.replay()?;
        Ok(store)
    }

    fn replay(&self) -> Result<(), ServiceError> {
        let Some(dir) = self.inner.config.journal_dir.clone() else {
            return Ok(());
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(journal_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let (state, pending) = replay_journal(&path)?;
            let id = state.id.clone();
            let session = Arc::new(Mutex::new(state));
            self.inner.sessions.write().insert(id.clone(), session.clone());
            let guard = session.lock();
            log::info!("replayed session {id}: {} utterances, {} to score", guard.utterances.len(), pending.len());
            for (k, revision) in pending {
                self.inner.enqueue(guard.job(k, revision));
            }
        }
        Ok(())
    }

    /// Makes `thresholds` available under `name` without a file.
    pub fn register_calibration(&self, name: &str, thresholds: Thresholds) {
        self.inner.named_calibrations.write().insert(name.to_string(), thresholds);
    }

    fn resolve_calibration(&self, name: Option<&str>) -> Result<SessionCalibration, ServiceError> {
        let name = match name {
            None | Some(UNCALIBRATED) => {
                return Ok(SessionCalibration {
                    name: None,
                    thresholds: None,
                })
            }
            Some(n) => n,
        };
        let unknown = || ServiceError::UnknownCalibration(name.to_string());
        if let Some(t) = self.inner.named_calibrations.read().get(name) {
            return Ok(SessionCalibration {
                name: Some(name.to_string()),
                thresholds: Some(*t),
            });
        }
        if !valid_calibration_name(name) {
            return Err(unknown());
        }
        let dir = self.inner.config.calibration_dir.as_ref().ok_or_else(unknown)?;
        let bytes = std::fs::read(dir.join(format!("{name}.json"))).map_err(|_| unknown())?;
        let thresholds: Thresholds = serde_json::from_slice(&bytes)
            .map_err(|e| ServiceError::InvalidRequest(format!("calibration {name:?} is unreadable: {e}")))?;
        Ok(SessionCalibration {
            name: Some(name.to_string()),
            thresholds: Some(thresholds),
        })
    }

    /// `calibration` is a registered or on-disk name, or `None`/`"uncalibrated"`.
    pub fn create_session(&self, calibration: Option<&str>) -> Result<SessionSummary, ServiceError> {
        let calibration = self.resolve_calibration(calibration)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut state = SessionState::new(id.clone(), now_ms(), calibration.clone());
        if let Some(dir) = &self.inner.config.journal_dir {
            state.journal = Some(Journal::create(dir, &id).map_err(journal_err)?);
        }
        state.record(&JournalEvent::Created {
            id: id.clone(),
            created_at_ms: state.created_at_ms,
            calibration,
        })?;
        let summary = state.summary();
        self.inner.sessions.write().insert(id, Arc::new(Mutex::new(state)));
        Ok(summary)
    }

    /// Journals and applies the utterance; scoring is scheduled, not awaited.
    pub fn append_utterance(&self, id: &str, input: NewUtterance) -> Result<AppendAck, ServiceError> {
        if input.text.trim().is_empty() {
            return Err(ServiceError::InvalidRequest("utterance text is empty".into()));
        }
        let session = self.inner.session(id)?;
        let mut state = session.lock();
        if state.status == SessionStatus::Closed {
            return Err(ServiceError::SessionClosed(id.to_string()));
        }
        let last = state.utterances.last().map_or(0, |u| u.timestamp_ms);
        let timestamp_ms = match input.timestamp_ms {
            Some(t) if t < last => return Err(ServiceError::StaleTimestamp { last, got: t }),
            Some(t) => t,
            None => now_ms().max(last),
        };
        let utterance = Utterance::new(
            input.speaker.unwrap_or_else(|| input.role.as_str().to_string()),
            input.role,
            input.text,
            timestamp_ms,
        );
        state.record(&JournalEvent::Utterance {
            utterance: utterance.clone(),
        })?;
        let scheduled = state.apply(utterance);
        if let Some((k, revision)) = scheduled {
            self.inner.enqueue(state.job(k, revision));
        }
        Ok(AppendAck {
            accepted: true,
            turns: state.turns.len(),
            utterances: state.utterances.len(),
            scheduled: scheduled.map(|(k, _)| k),
        })
    }

    pub fn moments(&self, id: &str) -> Result<MomentsSnapshot, ServiceError> {
        let session = self.inner.session(id)?;
        let state = session.lock();
        Ok(MomentsSnapshot {
            session_id: state.id.clone(),
            status: state.status,
            turns: state.turns.len(),
            utterances: state.utterances.len(),
            moments: state.moments.iter().map(|(k, e)| state.view(*k, e)).collect(),
        })
    }

    /// Forecast delta for a drafted responder reply; never mutates the session.
    pub fn whatif(&self, id: &str, draft: &str) -> Result<WhatIfResult, ServiceError> {
        if draft.trim().is_empty() {
            return Err(ServiceError::InvalidRequest("draft is empty".into()));
        }
        let context = {
            let session = self.inner.session(id)?;
            let state = session.lock();
            match state.turns.last() {
                Some(t) if t.role == Role::Seeker => state.turns.clone(),
                _ => return Err(ServiceError::WrongTurn),
            }
        };
        let backend = |e: pivot_core::BackendError| ServiceError::Backend {
            transient: e.is_transient(),
            message: e.to_string(),
        };
        let forecaster = self.inner.backends.forecaster.as_ref();
        let p_before = forecast(forecaster, &context).map_err(backend)?.probability;
        let p_after = forecast(forecaster, &extend_with_reply(&context, draft)).map_err(backend)?.probability;
        Ok(WhatIfResult {
            p_before,
            p_after,
            delta: p_before - p_after,
        })
    }

    /// The exact samples behind a Ready moment's score.
    pub fn simulations(&self, id: &str, k: usize) -> Result<SimulationsView, ServiceError> {
        let session = self.inner.session(id)?;
        let state = session.lock();
        let entry = state.moments.get(&k).ok_or(ServiceError::UnknownMoment(k))?;
        let score = match (&entry.status, &entry.score) {
            (MomentStatus::Ready, Some(s)) => s,
            _ => return Err(ServiceError::NotReady(k)),
        };
        Ok(SimulationsView {
            k,
            piv: score.value,
            n_used: score.n_used,
            samples: score
                .responses
                .iter()
                .zip(&score.probabilities)
                .map(|(r, p)| SimulationSample {
                    response: r.clone(),
                    probability: *p,
                })
                .collect(),
        })
    }

    /// Reschedules a Failed moment, within the manual retry budget.
    pub fn retry(&self, id: &str, k: usize) -> Result<MomentView, ServiceError> {
        let session = self.inner.session(id)?;
        let mut state = session.lock();
        let budget = 1 + self.inner.config.max_manual_retries;
        let entry = state.moments.get_mut(&k).ok_or(ServiceError::UnknownMoment(k))?;
        if entry.status != MomentStatus::Failed {
            return Err(ServiceError::RetryNotAllowed(format!("moment k={k} has not failed")));
        }
        if !entry.retriable {
            return Err(ServiceError::RetryNotAllowed(format!("moment k={k} failed permanently")));
        }
        if entry.attempts >= budget {
            return Err(ServiceError::RetryNotAllowed(format!("moment k={k} used all {budget} attempts")));
        }
        entry.attempts += 1;
        entry.status = MomentStatus::Pending;
        entry.error = None;
        entry.retriable = false;
        let revision = entry.revision;
        let view = state.view(k, &state.moments[&k]);
        self.inner.enqueue(state.job(k, revision));
        Ok(view)
    }

    pub fn close(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        let session = self.inner.session(id)?;
        let mut state = session.lock();
        if state.status == SessionStatus::Open {
            state.record(&JournalEvent::Closed)?;
            state.status = SessionStatus::Closed;
        }
        Ok(state.summary())
    }

    pub fn session(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        Ok(self.inner.session(id)?.lock().summary())
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().keys().cloned().collect();
        ids.sort();
        ids
    }

    /// The session transcript in corpus form, for offline replay.
    pub fn transcript(&self, id: &str) -> Result<Conversation, ServiceError> {
        let session = self.inner.session(id)?;
        let state = session.lock();
        Ok(Conversation {
            id: state.id.clone(),
            outcome: Outcome::Unknown,
            utterances: state.utterances.clone(),
            metadata: BTreeMap::new(),
        })
    }

    /// Blocks until no scoring job is queued or running. Returns false on timeout.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut n = self.inner.in_flight.lock();
        while *n > 0 {
            if self.inner.idle.wait_until(&mut n, deadline).timed_out() {
                return *n == 0;
            }
        }
        true
    }

    pub fn params(&self) -> &SimulatorParams {
        &self.inner.config.params
    }
}

impl Drop for SessionStore {
    fn drop(&mut self) {
        self.inner.jobs.lock().take();
        for handle in self.workers.drain(..) {
            let _ = handle.join();
        }
    }
}

fn replay_journal(path: &Path) -> Result<(SessionState, Vec<(usize, u32)>), ServiceError> {
    let events = Journal::read(path).map_err(journal_err)?;
    let mut iter = events.into_iter();
    let mut state = match iter.next() {
        Some(JournalEvent::Created {
            id,
            created_at_ms,
            calibration,
        }) => SessionState::new(id, created_at_ms, calibration),
        _ => return Err(ServiceError::Journal(format!("{}: missing created event", path.display()))),
    };
    for event in iter {
        match event {
            JournalEvent::Utterance { utterance } => {
                state.apply(utterance);
            }
            JournalEvent::Scored { k, revision, score } => {
                if let Some(entry) = state.moments.get_mut(&k).filter(|e| e.revision == revision) {
                    entry.status = MomentStatus::Ready;
                    entry.score = Some(score);
                }
            }
            JournalEvent::Closed => state.status = SessionStatus::Closed,
            JournalEvent::Created { .. } => {
                return Err(ServiceError::Journal(format!("{}: duplicate created event", path.display())))
            }
        }
    }
    let pending = state
        .moments
        .iter()
        .filter(|(_, e)| e.status == MomentStatus::Pending)
        .map(|(k, e)| (*k, e.revision))
        .collect();
    state.journal = Some(Journal::reopen(path).map_err(journal_err)?);
    Ok((state, pending))
}
