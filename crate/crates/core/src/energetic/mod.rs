//! Energetics of the discrete dislocation system and the incremental
//! minimization scheme.

pub mod catalog;
pub mod epsilon;
pub mod loops;
pub mod potentials;
pub mod scheme;

pub use catalog::{CatalogParams, Move, MoveKind};
pub use epsilon::{epsilon_study, round_loops, Bounds, EpsilonReport, EpsilonRun};
pub use loops::{extract_loops, loops_to_system, Loop, LoopMotion};
pub use potentials::{dissipation, psi_mass, CoreEnergy, DissipationPotential};
pub use scheme::{EnergyParts, Estimates, IncrementalState, Material, Scheme, SchemeParams, StepRecord, Trace};
