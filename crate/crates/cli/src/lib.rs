//! Benchmark harness for the physics-informed solvers: config handling,
//! the run pipeline, sweeps, reference-data caching and the `verify` suite.
//!
//! The `pinn` binary is a thin wrapper over this library.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod reference;
pub mod sweep;
pub mod verify;

pub use config::{ProblemKind, RunConfig, RunPlan};
pub use error::CliError;
pub use pipeline::{run, RunOutcome};
pub use sweep::{sweep, SweepConfig};
