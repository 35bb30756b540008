//! Multi-task neural-network regression engine for frequency-domain
//! luminescence-quenching sensing.
//!
//! The crate simulates phase-shift measurements of an oxygen-sensitive
//! luminophore at 16 modulation frequencies ([`physics`]), generates seeded
//! synthetic datasets over oxygen concentration and temperature ([`dataset`]),
//! trains branched multilayer perceptrons — a shared trunk plus task-specific
//! heads — with full-batch Adam ([`network`], [`optimizer`]), and reports
//! absolute-error statistics, binned boxplot summaries, and kernel density
//! estimates in physical units ([`metrics`]). Trained parameters round-trip
//! through a versioned text checkpoint ([`checkpoint`]).
//!
//! Everything is `f64` and bit-deterministic under fixed seeds: generation,
//! splitting, initialization, and training are pure functions of their inputs.

pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod network;
pub mod optimizer;
pub mod physics;

pub use error::{Error, Result};
