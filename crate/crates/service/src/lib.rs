//! Live sessions: append utterances as a conversation unfolds, score each
//! seeker-ending prefix in the background, and answer what-if queries for
//! drafted replies. [`SessionStore`] holds the logic; [`router`] exposes it over HTTP.

mod api;
mod journal;
mod store;

pub use api::{router, serve, ApiError};
pub use journal::{Journal, JournalEvent};
pub use store::{
    AppendAck, MomentStatus, MomentView, MomentsSnapshot, NewUtterance, ServiceError, SessionCalibration, SessionStatus,
    SessionStore, SessionSummary, SimulationSample, SimulationsView, StoreConfig, WhatIfResult, UNCALIBRATED,
};
