//! Harness-level failures: configuration problems, resource caps, and
//! everything bubbling up from the numeric core or the filesystem.

use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    /// A config field is missing, malformed, or incompatible with the chosen
    /// experiment. `path` names the offending field.
    Config { path: String, message: String },
    /// The largest per-trial design exceeds the configured element cap.
    MemoryCap { required: usize, cap: usize },
    /// A results file does not cover the config's full (value, trial) grid.
    IncompleteData { message: String },
    Core(minterp::Error),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config { path, message } => write!(f, "config `{path}`: {message}"),
            HarnessError::MemoryCap { required, cap } => write!(
                f,
                "per-trial design needs {required} elements ({} MB), cap is {cap} \
                 (raise `max_elements` to allow this)",
                required * 8 / (1 << 20)
            ),
            HarnessError::IncompleteData { message } => write!(f, "incomplete results: {message}"),
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Io(e) => write!(f, "io: {e}"),
            HarnessError::Json(e) => write!(f, "json: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Core(e) => Some(e),
            HarnessError::Io(e) => Some(e),
            HarnessError::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<minterp::Error> for HarnessError {
    fn from(e: minterp::Error) -> Self {
        HarnessError::Core(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
