//! Experiment orchestration for `eucfpp-core`: configuration files, the
//! deterministic parallel runner, result files, SVG plots and the
//! verification suite behind the `eucfpp` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod results;
pub mod runner;
pub mod verify;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
pub use runner::{run_animals, run_experiment, RunOptions, RunOutcome};
pub use verify::{verify_suite, Mutation, VerifyReport, VerifySizes};
