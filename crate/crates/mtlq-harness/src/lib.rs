//! Experiment harness for the mtlq engine: architecture catalog, experiment
//! configuration, end-to-end runners, and plot emission. The `mtlq` binary in
//! this crate exposes the `generate`, `train`, `compare`, `sweep`, and
//! `report` commands on top of these pieces.

pub mod arch;
pub mod config;
pub mod runner;
pub mod svg;

pub use arch::{build_architecture, prediction_source, Alphas, ArchitectureSelector};
pub use config::ExperimentConfig;
pub use runner::{compare, recompute_reports, run_single, weight_sweep, RunOutcome};
