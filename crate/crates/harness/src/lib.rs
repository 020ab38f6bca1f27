//! Coverage experiments, CSV reports, run manifests and the `simest` CLI.

pub mod cli;
pub mod config;
pub mod coverage;
pub mod error;
pub mod io;
pub mod manifest;
pub mod report;

pub use config::{read_config, ScenarioConfig};
pub use coverage::{coverage_experiment, coverage_experiment_with, CoverageReport, CoverageRow};
pub use error::{HarnessError, Result};
pub use report::write_report;
