//! A toy conversation world with a closed-form outcome model.
//!
//! Seeker messages carry valence tokens (`up` = +1, `down` = −1 by default);
//! each responder reply is one of a fixed vocabulary of moves with a weight.
//! The disengagement probability of any transcript is
//!
//! ```text
//! P = σ(θ0 − θ1·valence − Σ applied move weights)
//! ```
//!
//! so the outcome variance across the move vocabulary can be computed exactly
//! and compared with what the sampling pipeline estimates.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{context_digest, BackendError, Forecaster, GenerationRequest, SimulatorParams, Simulator};
use crate::conversation::{extract_moments, merge_turns, Conversation, Outcome, Role, Turn, Utterance};
use crate::measures::nearest_rank;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticError {
    #[error("responder message is not a known move: {0:?}")]
    UnknownMove(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub id: String,
    pub reply: String,
    pub weight: f64,
}

impl Move {
    pub fn new(id: &str, reply: &str, weight: f64) -> Self {
        Self {
            id: id.into(),
            reply: reply.into(),
            weight,
        }
    }
}

/// How a transcript maps to a disengagement probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeModel {
    /// σ(θ0 − θ1·valence − applied weights).
    Logistic,
    /// The probability is read off the most recent move; `base` before any move.
    Table { probabilities: BTreeMap<String, f64>, base: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub moves: Vec<Move>,
    pub seeker_tokens: BTreeMap<String, i64>,
    pub theta0: f64,
    pub theta1: f64,
    pub seed: u64,
    pub model: OutcomeModel,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            moves: vec![
                Move::new("validate", "That sounds really hard, and it makes sense that you feel this way.", 1.2),
                Move::new("plan", "Let's think together about one small thing that could help tonight.", 0.9),
                Move::new("explore", "Can you tell me more about what happened today?", 0.6),
                Move::new("reflect", "It sounds like you are carrying a lot right now.", 0.3),
                Move::new("filler", "Okay.", -0.2),
                Move::new("rush", "You should try to get some sleep.", -0.8),
                Move::new("dismiss", "I think you might be overreacting a little.", -1.4),
            ],
            seeker_tokens: [("up".to_string(), 1), ("down".to_string(), -1)].into_iter().collect(),
            theta0: 0.0,
            theta1: 0.5,
            seed: 0,
            model: OutcomeModel::Logistic,
        }
    }
}

impl WorldParams {
    /// Default moves with word-valued seeker tokens, for human-readable demos.
    pub fn counseling() -> Self {
        Self {
            seeker_tokens: [
                ("better", 1),
                ("calmer", 1),
                ("hopeful", 1),
                ("worse", -1),
                ("alone", -1),
                ("hopeless", -1),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            ..Self::default()
        }
    }

    /// A world whose continuation probabilities are given directly per move.
    pub fn probability_table(entries: &[(&str, f64)], base: f64) -> Self {
        let moves = entries
            .iter()
            .map(|(id, _)| Move::new(id, &format!("reply {id}"), 0.0))
            .collect();
        Self {
            moves,
            model: OutcomeModel::Table {
                probabilities: entries.iter().map(|(id, p)| (id.to_string(), *p)).collect(),
                base,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.moves.is_empty() {
            return Err(SyntheticError::InvalidWorld("move vocabulary is empty".into()));
        }
        let mut replies: Vec<&str> = self.moves.iter().map(|m| m.reply.as_str()).collect();
        replies.sort_unstable();
        if replies.windows(2).any(|w| w[0] == w[1]) {
            return Err(SyntheticError::InvalidWorld("reply texts must be distinct".into()));
        }
        if let OutcomeModel::Table { probabilities, base } = &self.model {
            let in_unit = |p: &f64| (0.0..=1.0).contains(p);
            if !in_unit(base) || !probabilities.values().all(in_unit) {
                return Err(SyntheticError::InvalidWorld("table probabilities must lie in [0, 1]".into()));
            }
            if let Some(m) = self.moves.iter().find(|m| !probabilities.contains_key(&m.id)) {
                return Err(SyntheticError::InvalidWorld(format!("no probability for move {:?}", m.id)));
            }
        }
        Ok(())
    }

    fn move_index(&self, reply: &str) -> Option<usize> {
        self.moves.iter().position(|m| m.reply == reply.trim())
    }

    /// Sampling parameters under which an [`EnumerateSimulator`] returns every move once.
    pub fn enumerate_params(&self) -> SimulatorParams {
        SimulatorParams {
            n: self.moves.len(),
            min_samples: self.moves.len().clamp(1, 2),
            ..SimulatorParams::default()
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub valence: i64,
    pub applied_weights: f64,
    pub last_move: Option<usize>,
}

impl WorldState {
    pub fn from_context(context: &[Turn], params: &WorldParams) -> Result<Self, SyntheticError> {
        let mut state = WorldState {
            valence: 0,
            applied_weights: 0.0,
            last_move: None,
        };
        for turn in context {
            for message in &turn.messages {
                state.observe(turn.role, &message.text, params)?;
            }
        }
        Ok(state)
    }

    fn observe(&mut self, role: Role, text: &str, params: &WorldParams) -> Result<(), SyntheticError> {
        match role {
            Role::Seeker => {
                self.valence += tokens(text).filter_map(|t| params.seeker_tokens.get(&t)).sum::<i64>();
            }
            Role::Responder => {
                let index = params
                    .move_index(text)
                    .ok_or_else(|| SyntheticError::UnknownMove(text.to_string()))?;
                self.applied_weights += params.moves[index].weight;
                self.last_move = Some(index);
            }
        }
        Ok(())
    }

    pub fn probability(&self, params: &WorldParams) -> f64 {
        match &params.model {
            OutcomeModel::Logistic => {
                sigmoid(params.theta0 - params.theta1 * self.valence as f64 - self.applied_weights)
            }
            OutcomeModel::Table { probabilities, base } => match self.last_move {
                Some(i) => probabilities[&params.moves[i].id],
                None => *base,
            },
        }
    }

    fn with_move(mut self, index: usize, params: &WorldParams) -> Self {
        self.applied_weights += params.moves[index].weight;
        self.last_move = Some(index);
        self
    }
}

/// Closed-form disengagement probability of a transcript.
pub fn oracle_forecast(context: &[Turn], params: &WorldParams) -> Result<f64, SyntheticError> {
    Ok(WorldState::from_context(context, params)?.probability(params))
}

/// Continuation probability after each move, in vocabulary order.
pub fn continuation_probabilities(context: &[Turn], params: &WorldParams) -> Result<Vec<f64>, SyntheticError> {
    let state = WorldState::from_context(context, params)?;
    Ok((0..params.moves.len())
        .map(|i| state.with_move(i, params).probability(params))
        .collect())
}

/// Exact outcome variance over a uniform distribution on moves.
pub fn exact_piv(context: &[Turn], params: &WorldParams) -> Result<f64, SyntheticError> {
    let uniform = vec![1.0; params.moves.len()];
    exact_piv_weighted(context, params, &uniform)
}

/// Exact outcome variance under the given (unnormalised) move distribution.
/// Computed as E[p²] − E[p]², independently of the sampling path.
pub fn exact_piv_weighted(context: &[Turn], params: &WorldParams, move_weights: &[f64]) -> Result<f64, SyntheticError> {
    if move_weights.len() != params.moves.len() || move_weights.iter().any(|w| *w < 0.0) {
        return Err(SyntheticError::InvalidWorld("one non-negative weight per move required".into()));
    }
    let total: f64 = move_weights.iter().sum();
    if total <= 0.0 {
        return Err(SyntheticError::InvalidWorld("move distribution has zero mass".into()));
    }
    let probs = continuation_probabilities(context, params)?;
    if probs.iter().all(|p| *p == probs[0]) {
        return Ok(0.0);
    }
    let first = probs.iter().zip(move_weights).map(|(p, w)| w * p).sum::<f64>() / total;
    let second = probs.iter().zip(move_weights).map(|(p, w)| w * p * p).sum::<f64>() / total;
    Ok((second - first * first).max(0.0))
}

/// Returns every move's reply once, in vocabulary order.
#[derive(Debug, Clone)]
pub struct EnumerateSimulator {
    replies: Vec<String>,
}

impl EnumerateSimulator {
    pub fn new(params: &WorldParams) -> Self {
        Self {
            replies: params.moves.iter().map(|m| m.reply.clone()).collect(),
        }
    }
}

impl Simulator for EnumerateSimulator {
    fn id(&self) -> &str {
        "enumerate"
    }

    fn generate(&self, _request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        Ok(self.replies.clone())
    }
}

/// How responder moves are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MovePolicy {
    Uniform,
    /// Softmax over ±strength·weight, favouring moves that push toward `toward`.
    Steered { toward: Outcome, strength: f64 },
}

impl MovePolicy {
    pub fn distribution(&self, params: &WorldParams) -> Vec<f64> {
        match *self {
            MovePolicy::Uniform => vec![1.0; params.moves.len()],
            MovePolicy::Steered { toward, strength } => {
                let sign = match toward {
                    Outcome::Disengaged => -1.0,
                    _ => 1.0,
                };
                let logits: Vec<f64> = params.moves.iter().map(|m| sign * strength * m.weight).collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                logits.iter().map(|l| (l - max).exp()).collect()
            }
        }
    }
}

/// Samples moves from a policy with a seeded generator; a stand-in for a language-model simulator.
#[derive(Debug, Clone)]
pub struct WorldSimulator {
    replies: Vec<String>,
    distribution: Vec<f64>,
}

impl WorldSimulator {
    pub fn new(params: &WorldParams, policy: MovePolicy) -> Self {
        Self {
            replies: params.moves.iter().map(|m| m.reply.clone()).collect(),
            distribution: policy.distribution(params),
        }
    }
}

impl Simulator for WorldSimulator {
    fn id(&self) -> &str {
        "world"
    }

    fn generate(&self, request: &GenerationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let mut hasher = Sha256::new();
        hasher.update(context_digest(request.context).as_bytes());
        hasher.update(request.params.seed.unwrap_or(0).to_le_bytes());
        hasher.update(request.attempt.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        let dist = WeightedIndex::new(&self.distribution).map_err(|e| BackendError::InvalidParams(e.to_string()))?;
        Ok((0..request.count)
            .map(|_| self.replies[dist.sample(&mut rng)].clone())
            .collect())
    }
}

/// Forecaster answering with [`oracle_forecast`].
#[derive(Debug, Clone)]
pub struct OracleForecaster {
    params: WorldParams,
}

impl OracleForecaster {
    pub fn new(params: WorldParams) -> Self {
        Self { params }
    }
}

impl Forecaster for OracleForecaster {
    fn id(&self) -> &str {
        "oracle"
    }

    fn predict(&self, context: &[Turn]) -> Result<f64, BackendError> {
        oracle_forecast(context, &self.params).map_err(|e| BackendError::InvalidInput(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub policy: MovePolicy,
    pub min_turns: usize,
    pub max_tokens_per_message: usize,
    /// Probability that a seeker turn is split over two messages.
    pub split_probability: f64,
    /// Neutral words prefixed to seeker messages; ignored by the outcome model.
    pub seeker_fillers: Vec<String>,
    pub seeker_gap_ms: (u64, u64),
    /// Responder latency is `base + per_piv · exact_piv + U(0, jitter)`.
    pub response_base_ms: u64,
    pub response_ms_per_piv: f64,
    pub response_jitter_ms: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            policy: MovePolicy::Uniform,
            min_turns: 2,
            max_tokens_per_message: 3,
            split_probability: 0.2,
            seeker_fillers: Vec::new(),
            seeker_gap_ms: (2_000, 20_000),
            response_base_ms: 60_000,
            response_ms_per_piv: 2_000_000.0,
            response_jitter_ms: 40_000,
        }
    }
}

impl GeneratorConfig {
    pub fn counseling() -> Self {
        Self {
            seeker_fillers: ["honestly", "i guess", "today", "i feel", "it's just", "idk", "still"]
                .into_iter()
                .map(String::from)
                .collect(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotAnnotation {
    pub conversation_id: String,
    pub k: usize,
    pub exact_piv: f64,
    pub planted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub conversations: Vec<Conversation>,
    pub annotations: Vec<PivotAnnotation>,
}

fn substream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"pivot-synthetic");
    hasher.update(seed.to_le_bytes());
    hasher.update((index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn generate_corpus(
    seed: u64,
    params: &WorldParams,
    n_conversations: usize,
    max_turns: usize,
) -> Result<SyntheticCorpus, SyntheticError> {
    generate_corpus_with(seed, params, &GeneratorConfig::default(), n_conversations, max_turns)
}

/// Deterministic for a fixed seed; conversation `i` uses its own substream.
/// The top decile (nearest-rank) of exact PIV values is marked as planted.
pub fn generate_corpus_with(
    seed: u64,
    params: &WorldParams,
    config: &GeneratorConfig,
    n_conversations: usize,
    max_turns: usize,
) -> Result<SyntheticCorpus, SyntheticError> {
    params.validate()?;
    if n_conversations == 0 {
        return Err(SyntheticError::InvalidWorld("n_conversations must be at least 1".into()));
    }
    let min_turns = config.min_turns.max(1).min(max_turns.max(1));
    let max_turns = max_turns.max(min_turns);
    let distribution = config.policy.distribution(params);
    let move_dist = WeightedIndex::new(&distribution).map_err(|e| SyntheticError::InvalidWorld(e.to_string()))?;
    let token_names: Vec<&String> = params.seeker_tokens.keys().collect();

    let mut conversations = Vec::with_capacity(n_conversations);
    let mut annotations = Vec::new();
    for index in 0..n_conversations {
        let mut rng = substream(seed, index);
        let id = format!("syn-{index:05}");
        let n_turns = rng.random_range(min_turns..=max_turns);
        let mut utterances: Vec<Utterance> = Vec::new();
        let mut clock: u64 = 0;
        let mut turns_so_far: Vec<Turn> = Vec::new();
        for t in 0..n_turns {
            if t % 2 == 0 {
                let parts = if rng.random_bool(config.split_probability.clamp(0.0, 1.0)) { 2 } else { 1 };
                let mut messages = Vec::with_capacity(parts);
                for part in 0..parts {
                    if t > 0 || part > 0 {
                        clock += rng.random_range(config.seeker_gap_ms.0..=config.seeker_gap_ms.1.max(config.seeker_gap_ms.0));
                    }
                    let text = seeker_message(&mut rng, &token_names, config);
                    messages.push(Utterance::new("seeker", Role::Seeker, text, clock));
                }
                turns_so_far.push(Turn {
                    role: Role::Seeker,
                    messages: messages.clone(),
                    index: t,
                });
                let piv = exact_piv(&turns_so_far, params)?;
                annotations.push(PivotAnnotation {
                    conversation_id: id.clone(),
                    k: t,
                    exact_piv: piv,
                    planted: false,
                });
                utterances.extend(messages);
                if t + 1 < n_turns {
                    let jitter = if config.response_jitter_ms > 0 {
                        rng.random_range(0..=config.response_jitter_ms)
                    } else {
                        0
                    };
                    clock += config.response_base_ms + (config.response_ms_per_piv * piv).round() as u64 + jitter;
                }
            } else {
                let chosen = &params.moves[move_dist.sample(&mut rng)];
                let message = Utterance::new("responder", Role::Responder, chosen.reply.clone(), clock);
                turns_so_far.push(Turn {
                    role: Role::Responder,
                    messages: vec![message.clone()],
                    index: t,
                });
                utterances.push(message);
            }
        }
        let p_final = oracle_forecast(&turns_so_far, params)?;
        let outcome = if rng.random_bool(p_final.clamp(0.0, 1.0)) {
            Outcome::Disengaged
        } else {
            Outcome::Success
        };
        conversations.push(Conversation {
            id,
            outcome,
            utterances,
            metadata: BTreeMap::new(),
        });
    }

    let mut values: Vec<f64> = annotations.iter().map(|a| a.exact_piv).collect();
    values.sort_by(f64::total_cmp);
    let cut = nearest_rank(&values, 90.0);
    for a in &mut annotations {
        a.planted = a.exact_piv >= cut && cut > 0.0;
    }
    Ok(SyntheticCorpus {
        conversations,
        annotations,
    })
}

fn seeker_message(rng: &mut ChaCha8Rng, token_names: &[&String], config: &GeneratorConfig) -> String {
    let mut words: Vec<String> = Vec::new();
    if !config.seeker_fillers.is_empty() {
        let i = rng.random_range(0..config.seeker_fillers.len());
        words.push(config.seeker_fillers[i].clone());
    }
    if !token_names.is_empty() {
        let count = rng.random_range(1..=config.max_tokens_per_message.max(1));
        for _ in 0..count {
            words.push(token_names[rng.random_range(0..token_names.len())].clone());
        }
    }
    if words.is_empty() {
        words.push("...".into());
    }
    words.join(" ")
}

/// Moments of a generated conversation paired with their exact PIV, for cross-checks.
pub fn exact_moment_pivs(conversation: &Conversation, params: &WorldParams) -> Result<Vec<(usize, f64)>, SyntheticError> {
    let turns = merge_turns(conversation).map_err(|e| SyntheticError::InvalidWorld(e.to_string()))?;
    extract_moments(&conversation.id, &turns)
        .into_iter()
        .map(|m| exact_piv(&m.context, params).map(|v| (m.k, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeker(text: &str) -> Turn {
        Turn {
            role: Role::Seeker,
            messages: vec![Utterance::new("s", Role::Seeker, text, 0)],
            index: 0,
        }
    }

    fn responder(text: &str, index: usize) -> Turn {
        Turn {
            role: Role::Responder,
            messages: vec![Utterance::new("r", Role::Responder, text, 0)],
            index,
        }
    }

    #[test]
    fn oracle_closed_form() {
        let params = WorldParams {
            theta0: 0.0,
            theta1: 1.0,
            ..WorldParams::default()
        };
        let p = oracle_forecast(&[seeker("up up")], &params).unwrap();
        assert!((p - 0.11920292).abs() < 1e-8);
        assert_eq!(oracle_forecast(&[seeker("nothing here")], &params).unwrap(), 0.5);
        assert_eq!(
            oracle_forecast(&[seeker("up"), responder("not a move", 1)], &params),
            Err(SyntheticError::UnknownMove("not a move".into()))
        );
    }

    #[test]
    fn exact_piv_table_world() {
        let params = WorldParams::probability_table(&[("a", 0.2), ("b", 0.4), ("c", 0.6), ("d", 0.8)], 0.5);
        params.validate().unwrap();
        let v = exact_piv(&[seeker("hi")], &params).unwrap();
        assert!((v - 0.05).abs() < 1e-12);
    }

    #[test]
    fn exact_piv_equal_weights_is_zero() {
        let params = WorldParams {
            moves: vec![Move::new("a", "A", 0.7), Move::new("b", "B", 0.7), Move::new("c", "C", 0.7)],
            ..WorldParams::default()
        };
        assert!(exact_piv(&[seeker("up down up")], &params).unwrap().abs() < 1e-15);
    }

    #[test]
    fn exact_piv_two_logistic_moves() {
        // σ(1) and σ(−1) from theta0 = 0 with weights ∓1.
        let params = WorldParams {
            moves: vec![Move::new("a", "A", -1.0), Move::new("b", "B", 1.0)],
            ..WorldParams::default()
        };
        let v = exact_piv(&[seeker("hello")], &params).unwrap();
        // ((σ(1) − σ(−1)) / 2)² evaluated independently.
        assert!((v - 0.053388066758518156).abs() < 1e-12, "{v}");
    }

    #[test]
    fn weighted_variant_degenerates_to_point_mass() {
        let params = WorldParams::default();
        let mut w = vec![0.0; params.moves.len()];
        w[2] = 1.0;
        assert_eq!(exact_piv_weighted(&[seeker("up")], &params, &w).unwrap(), 0.0);
    }

    #[test]
    fn invalid_worlds() {
        let dup = WorldParams {
            moves: vec![Move::new("a", "same", 1.0), Move::new("b", "same", 2.0)],
            ..WorldParams::default()
        };
        assert!(dup.validate().is_err());
        let empty = WorldParams {
            moves: vec![],
            ..WorldParams::default()
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic_and_bounded() {
        let params = WorldParams::default();
        let a = generate_corpus(7, &params, 20, 12).unwrap();
        let b = generate_corpus(7, &params, 20, 12).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.conversations.len(), 20);
        for c in &a.conversations {
            let turns = merge_turns(c).unwrap();
            assert!(turns.len() <= 12 && turns.len() >= 2);
            assert_eq!(turns[0].role, Role::Seeker);
        }
        assert!(a.annotations.iter().any(|x| x.planted));
        let c = generate_corpus(8, &params, 20, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_weights_plant_nothing() {
        let mut params = WorldParams::default();
        params.moves.iter_mut().for_each(|m| m.weight = 0.0);
        let corpus = generate_corpus(3, &params, 10, 8).unwrap();
        assert!(corpus.annotations.iter().all(|a| a.exact_piv == 0.0 && !a.planted));
    }

    #[test]
    fn annotations_match_recomputation() {
        let params = WorldParams::default();
        let corpus = generate_corpus(11, &params, 15, 10).unwrap();
        let mut recomputed = Vec::new();
        for c in &corpus.conversations {
            for (k, v) in exact_moment_pivs(c, &params).unwrap() {
                recomputed.push((c.id.clone(), k, v));
            }
        }
        let annotated: Vec<_> = corpus
            .annotations
            .iter()
            .map(|a| (a.conversation_id.clone(), a.k, a.exact_piv))
            .collect();
        assert_eq!(recomputed, annotated);
    }

    #[test]
    fn steering_biases_move_choice() {
        let params = WorldParams::default();
        let good = MovePolicy::Steered {
            toward: Outcome::Success,
            strength: 2.0,
        }
        .distribution(&params);
        let bad = MovePolicy::Steered {
            toward: Outcome::Disengaged,
            strength: 2.0,
        }
        .distribution(&params);
        assert!(good[0] > good[6]);
        assert!(bad[6] > bad[0]);
    }

    #[test]
    fn widening_weights_does_not_reduce_variance_near_midpoint() {
        let base = WorldParams::default();
        let mean = base.moves.iter().map(|m| m.weight).sum::<f64>() / base.moves.len() as f64;
        let ctx = [seeker("up down")];
        let mut previous = exact_piv(&ctx, &base).unwrap();
        for scale in [1.1, 1.25, 1.5] {
            let mut wider = base.clone();
            wider.moves.iter_mut().for_each(|m| m.weight = mean + scale * (m.weight - mean));
            let v = exact_piv(&ctx, &wider).unwrap();
            assert!(v >= previous, "scale {scale}: {v} < {previous}");
            previous = v;
        }
    }
}
