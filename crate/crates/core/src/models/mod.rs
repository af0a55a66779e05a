//! Builders for the systems used in experiments.

pub mod apparatus;
pub mod basic;
pub mod circuit;
pub mod spec;
pub mod spin;

pub use apparatus::{computational_basis, measurement_apparatus, ApparatusModel, Branch};
pub use basic::{complete_graph, random_hermitian, random_state, ring, two_level, uniform_state};
pub use circuit::{
    cat_state_circuit, cat_state_circuit_with, CatStateCircuit, CircuitLayout, Gate, GateSchedule,
    Layer, QubitRegister,
};
pub use spec::{BuiltModel, ModelSpec, StateSpec, MODEL_SCHEMA_VERSION};
pub use spin::{total_spin, SpinEstimate, SpinTally};
