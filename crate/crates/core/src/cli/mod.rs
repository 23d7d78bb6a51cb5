//! Configuration and subcommand drivers behind the `fracctl` binary.

pub mod config;
pub mod run;

pub use config::{ControlBlock, Eigenvalues, ExperimentConfig, ModelBlock, OutputBlock, DEFAULT_CONFIG};
pub use run::{run_simulate, run_sweep, run_synthesize, run_verify_kernels, NumberFormat, RunOutcome};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "FRACCTL_OUT_DIR";
