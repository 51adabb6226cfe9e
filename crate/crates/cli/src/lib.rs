//! Library half of the `qdinf` binary: configuration, command execution and
//! the exit-code contract (0 ok, 1 counterexample, 2 usage, 3 I/O).

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use commands::execute;
pub use config::{Command, FigureId, GridSpec, OutputFormat, RunConfig, SEED_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qdinf::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    pub counterexample: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.counterexample {
            1
        } else {
            0
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::from_config_str(&text)
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, cfg.to_config_string()).map_err(|e| CliError::io(path, e))
}

/// Validates, executes and writes the result to `cfg.output` (or returns it
/// for printing when unset).
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let outcome = execute(cfg)?;
    if let Some(path) = &cfg.output {
        std::fs::write(path, &outcome.body).map_err(|e| CliError::io(path, e))?;
    }
    Ok(outcome)
}
