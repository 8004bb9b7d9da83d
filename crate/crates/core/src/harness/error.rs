use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes of the command-line front end.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const RUNTIME: i32 = 2;
    pub const ASSUMPTION: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown preset '{0}' (see `list-presets`)")]
    UnknownPreset(String),
    #[error("cannot parse {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid experiment config:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trial series do not share a time grid: {0}")]
    GridMismatch(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownPreset(_) | HarnessError::Parse { .. } | HarnessError::Validation(_) => {
                exit_code::VALIDATION
            }
            HarnessError::AssumptionViolation(_) => exit_code::ASSUMPTION,
            HarnessError::Io { .. } | HarnessError::GridMismatch(_) | HarnessError::Runtime(_) => exit_code::RUNTIME,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}
