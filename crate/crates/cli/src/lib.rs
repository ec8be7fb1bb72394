//! Config-driven experiment runner for `nlle-core`.
//!
//! `nlle run --config exp.toml` validates the whole config, runs one
//! analysis and writes `<analysis>.csv` / `<analysis>.json` plus a
//! `manifest.json` with SHA-256 digests of every artifact.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Analysis, AnalysisKind, Experiment, ExperimentConfig, Format, ValidationErrors};
pub use output::{ArtifactEntry, RunManifest};
pub use run::{compute, run_config, RunError};
