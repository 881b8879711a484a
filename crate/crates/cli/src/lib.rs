//! Scenario runner for the measure-differential-equation schemes in
//! `mde-core`: JSON scenarios in, CSV and JSON artifacts out.

pub mod registry;
pub mod runner;
pub mod scenario;

pub use registry::Registry;
pub use runner::{run_scenario, Manifest, RunError, RunOptions};
pub use scenario::{AnalysisFlags, ConfigError, Scenario, SchemeChoice};
