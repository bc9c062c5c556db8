//! One-dimensional phase-space oracle: discretised Wigner functions, Poisson
//! and truncated Moyal brackets, explicit time stepping and the Weyl
//! transform back to a density-matrix kernel.

mod bracket;
mod evolve;
mod field;
mod grid;
pub mod oracle;
mod packets;
mod spectral;
mod weyl;

use thiserror::Error;

pub use bracket::{moyal_bracket, moyal_diagnostics, poisson_bracket, BracketOrder, MoyalDiagnostics};
pub use evolve::{evolve_wigner, stability_limit, EvolveOptions, EvolveReport, StabilityLimit};
pub use field::{HamiltonianField, Potential, QuadraticPotential};
pub use grid::{Axis, WignerGrid};
pub use packets::{default_axes, wigner_from_two_packets, PacketState};
pub use weyl::{arm_coherence, potential_commutator_term, weyl_density_matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseSpaceError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("potential undefined at q = {q}")]
    OutsidePotential { q: f64 },
    #[error("grids are not aligned")]
    GridMismatch,
    #[error("bracket order {n_max} needs potential derivatives to order {needed}, field has {available}")]
    InsufficientOrder { n_max: u32, needed: u32, available: u32 },
    #[error("q axis [{min}, {max}] does not cover [{}, {}]", -.needed, .needed)]
    GridTooSmall { min: f64, max: f64, needed: f64 },
    #[error("packets are not orthogonal: overlap {overlap:e} exceeds 1e-6")]
    NonOrthogonal { overlap: f64 },
    #[error("coherence magnitude {0} exceeds 1/2")]
    InvalidCoherence(f64),
    #[error("evolution unstable at t = {time}: |W| grew past 1e6 times its initial maximum")]
    Unstable { time: f64 },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfGrid { x: f64, y: f64 },
}
