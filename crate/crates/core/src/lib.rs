//! Interferometric phases of a particle held in superposition between two
//! source masses, reduced two-state dynamics under competing dynamical
//! laws, a phase-space (Wigner/Moyal) evolution oracle for the reduction,
//! and fringe-record synthesis and fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod gravity;
pub mod phasespace;
pub mod signal;
pub mod twostate;

pub use constants::{ball_radius, load_config, ExperimentConfig, PhysicalConstants, Side};
pub use gravity::{omega_classical, omega_quantum, PotentialProfile};
pub use twostate::{DynamicsModel, GeneralLinear, TwoLevelState};
