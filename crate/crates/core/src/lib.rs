//! Stochastic jump dynamics on the configuration graph of a Hamiltonian.
//!
//! A trajectory hops between basis states with rates set by complex jump
//! potentials that carry memory of past transitions. As `ħ₂ → 0` the
//! ensemble reproduces Schrödinger evolution; finite `ħ₂` predicts
//! deviations tied to the recurrence time of each transition.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod engine;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod models;
pub mod oracle;

pub use engine::{
    apply_jump, evolve_trajectory, evolve_with, jump_rates, recurrence_intervals, sample_next_jump,
    trajectory_rng, EngineConfig, JumpEvent, JumpModel, PhysicalConstants, RecurrenceReport,
    RecurrenceTracker, TrajectoryState,
};
pub use error::{Error, Result};
pub use graph::{
    build_graph, init_potentials, regularize_psi, DirectedEdge, EdgeId, GraphSnapshot, NodeId,
    PotentialTable, StateGraph,
};
pub use hamiltonian::{HamiltonianModel, SparseMatrix, C64};
pub use oracle::{DensityVector, SchrodingerOracle, WaveFunction};
