//! Discrete elastic fields on a uniform box grid.

pub mod mollify;
pub mod multigrid;
pub mod operator;
pub mod solver;
pub mod tensor;

pub use solver::{BetaSolution, Displacement, DomainGrid, ElasticModel, Holding, Loading, Ramp};
pub use tensor::Elasticity;
