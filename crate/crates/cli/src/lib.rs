//! Command-line harness around the simulation/training engine: typed TOML
//! configs, run directories with reproducible artifacts, scripted baselines,
//! sweeps, and plot-data export.

pub mod baseline;
pub mod config;
pub mod plotdata;
pub mod runio;
pub mod runner;
pub mod sweep;

use thiserror::Error as ThisError;

/// Harness-level errors. `Display` yields a single line starting with a
/// stable machine-parseable class name.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config_invalid: {}", .0.join("; "))]
    ConfigInvalid(Vec<String>),
    #[error("bad_args: {0}")]
    BadArgs(String),
    #[error("io_error: {0}")]
    Io(String),
    #[error("checkpoint_mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("infeasible_scenario: {0}")]
    InfeasibleScenario(String),
    #[error("missing_inputs: expected one of {}", .0.join(", "))]
    MissingInputs(Vec<String>),
    #[error("engine_error: {0}")]
    Engine(#[from] mabd_core::Error),
}

impl CliError {
    /// Stable class token for scripts.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "config_invalid",
            CliError::BadArgs(_) => "bad_args",
            CliError::Io(_) => "io_error",
            CliError::CheckpointMismatch(_) => "checkpoint_mismatch",
            CliError::InfeasibleScenario(_) => "infeasible_scenario",
            CliError::MissingInputs(_) => "missing_inputs",
            CliError::Engine(_) => "engine_error",
        }
    }
}
