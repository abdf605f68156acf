//! Configuration-driven benchmark runs of the subspace-iteration solvers.

pub mod config;
pub mod output;
pub mod runner;
pub mod scaling;

pub use config::{resolve, ConfigError, ExperimentConfig, Overrides, RunSpec};
pub use output::{read_results, ResultRow};
pub use runner::{run_experiment, BenchError, ExperimentSummary, RunOptions};
