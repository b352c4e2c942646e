//! Bundled demo: a synthetic counseling-style corpus scored with the world
//! simulator and oracle forecaster, rendered with bracketed PIV per moment.
//!
//! ```text
//! Conversation 1 (syn-00000, outcome: success)
//! [ 0.0123 ] i feel worse alone
//!     > Can you tell me more about what happened today?
//! **[ 0.0871 ]** honestly hopeless
//! ```
//!
//! High-labelled moments are wrapped in `**`. Output is a pure function of the config.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{run_batch, AnalysisError, Backends, BatchConfig};
use crate::backends::{RetryPolicy, SimulatorParams};
use crate::conversation::{merge_turns, ConversationError, Role};
use crate::measures::PivLabel;
use crate::synthetic::{generate_corpus_with, GeneratorConfig, MovePolicy, OracleForecaster, SyntheticError, WorldParams, WorldSimulator};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Conversation(#[from] ConversationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub seed: u64,
    /// Conversations printed.
    pub show: usize,
    /// Conversations generated and scored; thresholds are calibrated over all of them.
    pub reference: usize,
    pub max_turns: usize,
    pub samples: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            show: 3,
            reference: 60,
            max_turns: 10,
            samples: 10,
        }
    }
}

fn bracket(value: f64, label: PivLabel) -> String {
    let inner = format!("[ {value:.4} ]");
    if label == PivLabel::High {
        format!("**{inner}**")
    } else {
        inner
    }
}

pub fn render_demo(config: &DemoConfig) -> Result<String, DemoError> {
    let params = WorldParams {
        seed: config.seed,
        ..WorldParams::counseling()
    };
    let reference = config.reference.max(config.show).max(1);
    let corpus = generate_corpus_with(config.seed, &params, &GeneratorConfig::counseling(), reference, config.max_turns)?;
    let backends = Backends {
        simulator: Arc::new(WorldSimulator::new(&params, MovePolicy::Uniform)),
        forecaster: Arc::new(OracleForecaster::new(params.clone())),
        embedder: None,
    };
    let batch = BatchConfig {
        params: SimulatorParams {
            n: config.samples,
            seed: Some(config.seed),
            min_samples: config.samples.min(2),
            ..SimulatorParams::default()
        },
        retry: RetryPolicy::immediate(),
        enable_ri: false,
        ..BatchConfig::default()
    };
    let table = run_batch(&corpus.conversations, &backends, &batch)?;

    let mut out = String::new();
    for (i, conversation) in corpus.conversations.iter().take(config.show).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "Conversation {} ({}, outcome: {})", i + 1, conversation.id, conversation.outcome.as_str());
        for turn in merge_turns(conversation)? {
            let text = turn.text().replace('\n', " / ");
            match turn.role {
                Role::Responder => {
                    let _ = writeln!(out, "    > {text}");
                }
                Role::Seeker => {
                    let record = table
                        .records
                        .iter()
                        .find(|r| r.conversation_id == conversation.id && r.k == turn.index);
                    match record.and_then(|r| r.piv.map(|v| (v, r.piv_label))) {
                        Some((value, label)) => {
                            let _ = writeln!(out, "{} {text}", bracket(value, label));
                        }
                        None => {
                            let _ = writeln!(out, "[ n/a ] {text}");
                        }
                    }
                }
            }
        }
    }
    if let Some(t) = table.thresholds {
        let _ = writeln!(
            out,
            "\nthresholds over {} moments: low <= {:.4}, high >= {:.4}",
            t.n_reference, t.low_cut, t.high_cut
        );
    }
    Ok(out)
}
