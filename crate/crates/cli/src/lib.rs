//! Benchmark presets, config-file loading, output writers, and the
//! adaptive-vs-uniform comparison driver behind the `topoflow` binary.

pub mod compare;
pub mod config;
pub mod csvlog;
pub mod presets;
pub mod vtk;

/// Everything that can go wrong between the command line and a finished run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown preset '{0}'; available: left_inflow, three_inflows, bypass")]
    UnknownPreset(String),
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Run(#[from] topoflow::Error),
}
