//! Pivotal-moment detection for conversations.
//!
//! A *moment* is a conversation prefix ending on a seeker turn. Its PIV score is
//! the variance of an outcome forecaster's predictions across simulated next
//! replies: high PIV means the next reply matters a lot.

pub mod analysis;
pub mod backends;
pub mod conversation;
pub mod demo;
pub mod measures;
pub mod synthetic;

pub use analysis::{run_batch, Backends, BatchConfig, MomentRecord, MomentTable};
pub use backends::{
    BackendError, Embedder, EmbeddingVector, Forecast, Forecaster, RetryPolicy, SimulationSet, Simulator,
    SimulatorParams,
};
pub use conversation::{Conversation, Moment, Outcome, Role, Turn, Utterance};
pub use measures::{MeasureError, PivLabel, PivotalScore, RangeScore, RiScore, Thresholds};
