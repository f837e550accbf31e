use std::io;
use std::path::{Path, PathBuf};

use lanefusion_core::rollout::RolloutError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad command line or configuration; `key` is the dotted path of the offending entry.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error("run failed in episode {episode}: {reason}")]
    RunFailed { episode: u64, reason: String },
    #[error("{0}")]
    Invalid(String),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> Self {
        let path = path.as_ref().to_path_buf();
        move |source| HarnessError::Io { path, source }
    }

    pub fn format(path: impl AsRef<Path>, message: impl ToString) -> Self {
        HarnessError::Format { path: path.as_ref().to_path_buf(), message: message.to_string() }
    }

    /// 1 for usage and configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
