//! Deterministic reference routes: exact Schrödinger evolution, the potential
//! ODE, the master equation and the closed-form phase solution.

pub mod master;
pub mod ode;
pub mod phase;
pub mod potentials;
pub mod schrodinger;

pub use master::{master_equation_evolve, OraclePath, PsiPath, NEGATIVE_DENSITY_TOL};
pub use ode::{integrate, OdeOptions, OdeScalar, OdeStats, OdeSystem};
pub use phase::{accumulated_phase, closed_form_potentials, integrate_path, node_phase_sums};
pub use potentials::{
    potential_ode_evolve, potential_ode_evolve_driven, potentials_from_psi, POLE_GUARD,
};
pub use schrodinger::{
    schrodinger_evolve, schrodinger_integrate, DensityVector, SchrodingerOracle, WaveFunction,
    NORM_TOL,
};
