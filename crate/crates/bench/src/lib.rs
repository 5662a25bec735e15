//! Config-driven experiments over the mean-field and truncated-Fock models.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

pub use config::{Experiment, ExperimentConfig};
pub use error::BenchError;
pub use experiments::{execute, execute_with_threads};
pub use manifest::RunManifest;
