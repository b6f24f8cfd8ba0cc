//! Declarative experiment runner: configs, per-experiment drivers, and
//! deterministic CSV/JSON reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{default_config, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, RunRecord};
pub use report::{emit_reports, AssertionResult};
