use std::path::PathBuf;

use hotspot_core::stepper::RunFailure;

/// Exit code when every verdict passes.
pub const EXIT_PASS: i32 = 0;
/// Exit code when at least one verdict fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: {key}: {message}")]
    Config { line: usize, key: String, message: String },
    #[error("{0}")]
    Core(#[from] hotspot_core::Error),
    #[error("simulation failed: {0}")]
    Run(#[from] Box<RunFailure>),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what} line {line}: {message}")]
    Format { what: &'static str, line: usize, message: String },
}

impl HarnessError {
    pub fn config(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config { line, key: key.into(), message: message.into() }
    }

    pub fn format(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        HarnessError::Format { what, line, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            HarnessError::Run(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<RunFailure> for HarnessError {
    fn from(f: RunFailure) -> Self {
        HarnessError::Run(Box::new(f))
    }
}
