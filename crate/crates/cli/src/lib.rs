//! Experiment harness around the solver core: structured-text configuration,
//! seeded initial-data recipes, Mach-number sweeps with per-run output
//! directories, and deterministic CSV emission.

pub mod config;
pub mod csvio;
pub mod data;
pub mod sweep;

/// Harness-level failure, split by exit-code class: bad input (usage, exit
/// code 2) versus runtime aborts (exit code 1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(err: impl std::fmt::Display) -> Self {
        CliError::Usage(err.to_string())
    }

    pub fn runtime(err: impl std::fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }
}
