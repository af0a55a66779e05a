use thiserror::Error;

use crate::engine::{JumpEvent, TrajectoryState};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error(
        "slice {slice} is not Hermitian at ({row}, {col}): H[{row},{col}] = {value}, \
         conj(H[{col},{row}]) = {mirror}"
    )]
    NonHermitian {
        slice: usize,
        row: usize,
        col: usize,
        value: String,
        mirror: String,
    },

    #[error("non-finite value {what}")]
    NonFinite { what: String },

    #[error(
        "negative jump rate {rate} on edge {from}->{to} (A = {potential}); \
         hbar2 is too large for this regime"
    )]
    NegativeRate {
        from: usize,
        to: usize,
        potential: String,
        rate: f64,
    },

    #[error("frozen trajectory at node {node}, t = {time}: every outgoing rate is zero")]
    FrozenTrajectory { node: usize, time: f64 },

    #[error("zero coupling on edge {from}->{to} at t = {time}; configure a baseline floor")]
    ZeroCoupling { from: usize, to: usize, time: f64 },

    #[error("non-finite potential after jump {event:?}: edge {from}->{to} = {value}")]
    NonFinitePotential {
        event: JumpEvent,
        from: usize,
        to: usize,
        value: String,
    },

    #[error("event budget of {max_events} exhausted at t = {}", .state.time)]
    Truncated {
        max_events: u64,
        state: Box<TrajectoryState>,
        events: Vec<JumpEvent>,
    },

    #[error("potential on edge {from}->{to} blew up (|A| = {magnitude:e}) at t = {time}")]
    PoleBlowUp {
        from: usize,
        to: usize,
        magnitude: f64,
        time: f64,
    },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("density component {node} went negative ({value:e}) at t = {time}")]
    NegativeDensity { node: usize, value: f64, time: f64 },

    #[error("basis is not orthonormal: max |G - I| = {deviation:e} at ({row}, {col})")]
    NonOrthogonalBasis {
        deviation: f64,
        row: usize,
        col: usize,
    },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("{failed} of {total} trajectories failed (first: {first})")]
    EnsembleFailure {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
