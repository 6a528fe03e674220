//! Configuration, run orchestration and artifact writing for the CLI.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{
    cmd_defaults, cmd_inspect, cmd_solve, cmd_sweep, cmd_verify, error_exit_code, error_json, manifest_exit_code,
    run_check, run_dir, CATALOGUE, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_FAIL, EXIT_PASS, SWEEP_PARAMETERS,
};
pub use config::{ExperimentConfig, OUT_ENV};
pub use manifest::{CheckStatus, RunManifest, RunWriter};
