//! Moment scores: outcome variance across simulated replies (PIV), the
//! embedding-dispersion baseline (Range), and retrospective improvement (RI),
//! plus nearest-rank calibration of High/Low thresholds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    embed, extend_with_reply, forecast, simulate, BackendError, DimensionLock, Embedder, EmbeddingVector,
    Forecaster, RetryPolicy, SimulatorParams, Simulator,
};
use crate::conversation::Moment;

/// Norms at or below this are treated as zero.
pub const NORM_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("value {0} outside its valid range")]
    OutOfRange(f64),
    #[error("mean embedding has zero norm; cosine distance undefined")]
    DegenerateMean,
    #[error("embedding {0} has zero norm")]
    ZeroVector(usize),
    #[error("embeddings disagree on dimension")]
    DimensionMismatch,
    #[error("need at least {needed} scores to calibrate, got {got}")]
    TooFewScores { got: usize, needed: usize },
    #[error("invalid percentiles ({lo}, {hi})")]
    InvalidPercentiles { lo: f64, hi: f64 },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl MeasureError {
    pub fn is_transient(&self) -> bool {
        match self {
            MeasureError::Backend(e) => e.is_transient(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotalScore {
    pub conversation_id: String,
    pub k: usize,
    pub value: f64,
    /// Simulated replies, aligned with `probabilities`.
    pub responses: Vec<String>,
    pub probabilities: Vec<f64>,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeScore {
    pub conversation_id: String,
    pub k: usize,
    pub value: f64,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiScore {
    pub conversation_id: String,
    pub k: usize,
    pub p_before: f64,
    pub p_after: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low_cut: f64,
    pub high_cut: f64,
    pub lo_pct: f64,
    pub hi_pct: f64,
    pub n_reference: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivLabel {
    Low,
    Mid,
    High,
}

impl PivLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PivLabel::Low => "low",
            PivLabel::Mid => "mid",
            PivLabel::High => "high",
        }
    }
}

fn check_probability(p: f64) -> Result<(), MeasureError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MeasureError::OutOfRange(p));
    }
    Ok(())
}

/// Population variance of outcome probabilities.
pub fn piv_from_probs(probabilities: &[f64]) -> Result<f64, MeasureError> {
    if probabilities.len() < 2 {
        return Err(MeasureError::TooFewSamples {
            got: probabilities.len(),
            needed: 2,
        });
    }
    for &p in probabilities {
        check_probability(p)?;
    }
    if probabilities.iter().all(|&p| p == probabilities[0]) {
        return Ok(0.0);
    }
    let n = probabilities.len() as f64;
    let mean = probabilities.iter().sum::<f64>() / n;
    let var = probabilities.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    Ok(var.min(0.25))
}

/// Simulates replies at `moment`, forecasts each continuation and takes the variance.
pub fn compute_piv(
    moment: &Moment,
    simulator: &dyn Simulator,
    forecaster: &dyn Forecaster,
    params: &SimulatorParams,
    retry: &RetryPolicy,
) -> Result<PivotalScore, MeasureError> {
    let set = simulate(simulator, moment, params, retry)?;
    let probabilities = set
        .responses
        .iter()
        .map(|reply| forecast(forecaster, &extend_with_reply(&moment.context, reply)).map(|f| f.probability))
        .collect::<Result<Vec<_>, _>>()?;
    let value = piv_from_probs(&probabilities)?;
    Ok(PivotalScore {
        conversation_id: moment.conversation_id.clone(),
        k: moment.k,
        value,
        n_used: probabilities.len(),
        responses: set.responses,
        probabilities,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Mean cosine distance of each vector from the mean vector.
pub fn range_from_vectors(vectors: &[EmbeddingVector]) -> Result<f64, MeasureError> {
    if vectors.len() < 2 {
        return Err(MeasureError::TooFewSamples {
            got: vectors.len(),
            needed: 2,
        });
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(MeasureError::DimensionMismatch);
    }
    let norms: Vec<f64> = vectors.iter().map(|v| norm(&v.values)).collect();
    if let Some(i) = norms.iter().position(|&n| n <= NORM_EPSILON) {
        return Err(MeasureError::ZeroVector(i));
    }
    let count = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x / count;
        }
    }
    let mean_norm = norm(&mean);
    if mean_norm <= NORM_EPSILON {
        return Err(MeasureError::DegenerateMean);
    }
    let total: f64 = vectors
        .iter()
        .zip(&norms)
        .map(|(v, n)| 1.0 - dot(&v.values, &mean) / (n * mean_norm))
        .sum();
    Ok((total / count).clamp(0.0, 2.0))
}

pub fn compute_range(
    moment: &Moment,
    simulator: &dyn Simulator,
    embedder: &dyn Embedder,
    params: &SimulatorParams,
    retry: &RetryPolicy,
    lock: &DimensionLock,
) -> Result<RangeScore, MeasureError> {
    let set = simulate(simulator, moment, params, retry)?;
    let vectors = embed(embedder, &set.responses, lock)?;
    let value = range_from_vectors(&vectors)?;
    Ok(RangeScore {
        conversation_id: moment.conversation_id.clone(),
        k: moment.k,
        value,
        n_used: vectors.len(),
    })
}

/// Drop in forecast probability from `p_before` to `p_after`; positive is an improvement.
pub fn ri(p_before: f64, p_after: f64) -> Result<f64, MeasureError> {
    check_probability(p_before)?;
    check_probability(p_after)?;
    Ok(p_before - p_after)
}

/// The ⌈p/100·n⌉-th smallest value (1-based), clamped to the sample.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub const MIN_CALIBRATION_SCORES: usize = 10;

/// Nearest-rank cuts over a pooled reference sample.
pub fn calibrate(scores: &[f64], lo_pct: f64, hi_pct: f64) -> Result<Thresholds, MeasureError> {
    if !(lo_pct > 0.0 && lo_pct < hi_pct && hi_pct < 100.0) {
        return Err(MeasureError::InvalidPercentiles { lo: lo_pct, hi: hi_pct });
    }
    if scores.len() < MIN_CALIBRATION_SCORES {
        return Err(MeasureError::TooFewScores {
            got: scores.len(),
            needed: MIN_CALIBRATION_SCORES,
        });
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MeasureError::OutOfRange(*bad));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Thresholds {
        low_cut: nearest_rank(&sorted, lo_pct),
        high_cut: nearest_rank(&sorted, hi_pct),
        lo_pct,
        hi_pct,
        n_reference: sorted.len(),
    })
}

/// Inclusive boundaries; High wins when the cuts coincide.
pub fn discretize(score: f64, thresholds: &Thresholds) -> PivLabel {
    if score >= thresholds.high_cut {
        PivLabel::High
    } else if score <= thresholds.low_cut {
        PivLabel::Low
    } else {
        PivLabel::Mid
    }
}
