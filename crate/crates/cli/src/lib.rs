//! Command-line harness: scenario files, run orchestration, the invariant
//! suite and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod suite;

pub use config::{canonical, parse_scenario, Scenario};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use suite::Level;
