//! Experiment harness: configs, the seeded parallel sweep runner, the flat
//! CSV result schema, and per-experiment verdicts.

pub mod config;
pub mod error;
pub mod rows;
pub mod runner;
pub mod verdict;

pub use config::{Experiment, ExperimentConfig, SweepValue};
pub use error::{HarnessError, Result};
pub use rows::ResultRow;
pub use runner::{run_experiment, write_outputs, RunMeta, RunOutput};
pub use verdict::{verdict, VerdictReport};
