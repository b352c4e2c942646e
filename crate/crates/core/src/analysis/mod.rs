//! Batch scoring over corpora and the validation statistics built on it.

mod curves;
mod fightin;
mod report;
mod stats;

pub use curves::{binned_curve, top_bottom_slope, CurveBin, Field, GroupCurve};
pub use fightin::{fightin_words, fightin_words_with, tokenize, FightinConfig, Prior, TermScore, DEFAULT_PRIOR_MASS};
pub use report::{
    analyze, emit_report, AnalysisBundle, AnalysisConfig, Comparison, DistributionSummary, GroupSummary, TermCell,
    REPORT_FILES,
};
pub use stats::{kolmogorov_sf, ks_two_sample, mann_whitney, u_complement, TestResult, KOLMOGOROV_SMIRNOV, MANN_WHITNEY};

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{forecast, DimensionLock, Embedder, Forecaster, RetryPolicy, SimulatorParams, Simulator};
use crate::conversation::{extract_moments, merge_turns, response_time, Conversation, Moment, Outcome, Role, Turn};
use crate::measures::{calibrate, compute_piv, compute_range, discretize, ri, PivLabel, Thresholds};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains NaN")]
    NonFinite,
    #[error("corpus is empty after tokenization")]
    EmptyCorpus,
    #[error("field {0} is missing from every record")]
    FieldMissing(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate moment ({0}, {1})")]
    DuplicateMoment(String, usize),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    First,
    Second,
}

impl Half {
    /// Turns before ⌈len/2⌉ are in the first half.
    pub fn of(k: usize, n_turns: usize) -> Self {
        if k < n_turns.div_ceil(2) {
            Half::First
        } else {
            Half::Second
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Half::First => "first",
            Half::Second => "second",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub conversation_id: String,
    pub k: usize,
    pub piv: Option<f64>,
    pub range: Option<f64>,
    pub ri: Option<f64>,
    pub piv_label: PivLabel,
    pub response_time_s: Option<f64>,
    pub outcome: Outcome,
    pub half: Half,
    pub reply_len_chars: Option<usize>,
    /// Seeker text of turn k.
    pub text: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub records: Vec<MomentRecord>,
    pub run_digest: String,
    pub thresholds: Option<Thresholds>,
}

impl MomentTable {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert((r.conversation_id.as_str(), r.k)) {
                return Err(AnalysisError::DuplicateMoment(r.conversation_id.clone(), r.k));
            }
        }
        Ok(())
    }

    /// Recomputes labels from `thresholds` (or marks all Mid when `None`).
    pub fn relabel(&mut self, thresholds: Option<Thresholds>) {
        self.thresholds = thresholds;
        for r in &mut self.records {
            r.piv_label = match (r.piv, &thresholds) {
                (Some(v), Some(t)) => discretize(v, t),
                _ => PivLabel::Mid,
            };
        }
    }

    pub fn piv_values(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.piv).collect()
    }
}

#[derive(Clone)]
pub struct Backends {
    pub simulator: Arc<dyn Simulator>,
    pub forecaster: Arc<dyn Forecaster>,
    pub embedder: Option<Arc<dyn Embedder>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub params: SimulatorParams,
    pub retry: RetryPolicy,
    pub enable_range: bool,
    pub enable_ri: bool,
    pub lo_pct: f64,
    pub hi_pct: f64,
    /// Externally supplied cuts; calibrated over this table when absent.
    pub calibration: Option<Thresholds>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            params: SimulatorParams::default(),
            retry: RetryPolicy::default(),
            enable_range: false,
            enable_ri: true,
            lo_pct: 10.0,
            hi_pct: 90.0,
            calibration: None,
        }
    }
}

/// Digest of everything that determines a run's numbers.
pub fn run_digest(config: &BatchConfig, backends: &Backends) -> String {
    #[derive(Serialize)]
    struct Provenance<'a> {
        config: &'a BatchConfig,
        simulator: &'a str,
        forecaster: &'a str,
        embedder: Option<&'a str>,
    }
    let json = serde_json::to_string(&Provenance {
        config,
        simulator: backends.simulator.id(),
        forecaster: backends.forecaster.id(),
        embedder: backends.embedder.as_ref().map(|e| e.id()),
    })
    .expect("provenance serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

struct Job<'a> {
    conversation: &'a Conversation,
    turns: Arc<Vec<Turn>>,
    moment: Moment,
}

/// Scores every moment of every conversation. Per-moment failures are
/// recorded on the record and never abort the run.
pub fn run_batch(corpus: &[Conversation], backends: &Backends, config: &BatchConfig) -> Result<MomentTable, AnalysisError> {
    config
        .params
        .validate()
        .map_err(|e| AnalysisError::InvalidConfig(e.to_string()))?;
    if config.enable_range && backends.embedder.is_none() {
        return Err(AnalysisError::InvalidConfig("range enabled without an embedder".into()));
    }
    if !(config.lo_pct > 0.0 && config.lo_pct < config.hi_pct && config.hi_pct < 100.0) {
        return Err(AnalysisError::InvalidConfig("percentiles must satisfy 0 < lo < hi < 100".into()));
    }
    let mut ids = HashSet::new();
    let mut jobs = Vec::new();
    for conversation in corpus {
        if !ids.insert(conversation.id.as_str()) {
            return Err(AnalysisError::InvalidConfig(format!("duplicate conversation id {:?}", conversation.id)));
        }
        let Ok(turns) = merge_turns(conversation) else {
            continue;
        };
        let turns = Arc::new(turns);
        for moment in extract_moments(&conversation.id, &turns) {
            jobs.push(Job {
                conversation,
                turns: turns.clone(),
                moment,
            });
        }
    }

    let lock = DimensionLock::new();
    let mut records: Vec<MomentRecord> = jobs.par_iter().map(|job| score_job(job, backends, config, &lock)).collect();

    let thresholds = match config.calibration {
        Some(t) => Some(t),
        None => calibrate(
            &records.iter().filter_map(|r| r.piv).collect::<Vec<_>>(),
            config.lo_pct,
            config.hi_pct,
        )
        .ok(),
    };
    for r in &mut records {
        r.piv_label = match (r.piv, &thresholds) {
            (Some(v), Some(t)) => discretize(v, t),
            _ => PivLabel::Mid,
        };
    }
    Ok(MomentTable {
        records,
        run_digest: run_digest(config, backends),
        thresholds,
    })
}

fn score_job(job: &Job<'_>, backends: &Backends, config: &BatchConfig, lock: &DimensionLock) -> MomentRecord {
    let k = job.moment.k;
    let turns = &job.turns;
    let mut errors = Vec::new();

    let piv = match compute_piv(
        &job.moment,
        backends.simulator.as_ref(),
        backends.forecaster.as_ref(),
        &config.params,
        &config.retry,
    ) {
        Ok(score) => Some(score.value),
        Err(e) => {
            errors.push(format!("piv: {e}"));
            None
        }
    };

    let range = match (&backends.embedder, config.enable_range) {
        (Some(embedder), true) => match compute_range(
            &job.moment,
            backends.simulator.as_ref(),
            embedder.as_ref(),
            &config.params,
            &config.retry,
            lock,
        ) {
            Ok(score) => Some(score.value),
            Err(e) => {
                errors.push(format!("range: {e}"));
                None
            }
        },
        _ => None,
    };

    let ri_value = if config.enable_ri && k + 2 < turns.len() && turns[k + 2].role == Role::Seeker {
        let before = forecast(backends.forecaster.as_ref(), &turns[..=k]);
        let after = forecast(backends.forecaster.as_ref(), &turns[..=k + 2]);
        match (before, after) {
            (Ok(b), Ok(a)) => ri(b.probability, a.probability).ok(),
            (Err(e), _) | (_, Err(e)) => {
                errors.push(format!("ri: {e}"));
                None
            }
        }
    } else {
        None
    };

    let response_time_s = if job.conversation.has_real_timestamps() {
        response_time(turns, k).ok()
    } else {
        None
    };
    let reply_len_chars = turns
        .get(k + 1)
        .filter(|t| t.role == Role::Responder)
        .map(|t| t.text().chars().count());

    MomentRecord {
        conversation_id: job.conversation.id.clone(),
        k,
        piv,
        range,
        ri: ri_value,
        piv_label: PivLabel::Mid,
        response_time_s,
        outcome: job.conversation.outcome,
        half: Half::of(k, turns.len()),
        reply_len_chars,
        text: turns[k].text(),
        error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
    }
}
