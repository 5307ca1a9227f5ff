//! Experiment runner for the dyadic shell model: JSON configuration,
//! per-command pipelines, sweeps and digest manifests.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;
pub mod sweep;

pub use config::{Command, DataSpec, ExperimentConfig, Format};
pub use error::{CliError, CliResult};
pub use manifest::{RunManifest, Verdict};
pub use run::run;
