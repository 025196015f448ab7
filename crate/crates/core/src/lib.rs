//! Simplicial currents in space and space-time, dislocation kinematics, a
//! discrete elastic field solver and an incremental energetic scheme for
//! discrete dislocation plasticity.

pub mod algebra;
pub mod chain;
pub mod complex;
pub mod curl;
pub mod dislocation;
pub mod elastic;
pub mod energetic;
pub mod error;
pub mod flat;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod lp;
pub mod scenario;
pub mod spacetime;
pub mod tension;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
