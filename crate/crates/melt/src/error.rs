use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything the pipeline can fail with, grouped by process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{0}")]
    Input(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error(transparent)]
    Core(#[from] melt_core::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }

    /// 1 input error, 2 stage failure, 3 validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Input(_) => 1,
            Error::Core(melt_core::Error::MissingInput(_)) => 1,
            Error::Validation(_) | Error::Core(melt_core::Error::InvalidParameter(_)) => 3,
            Error::Core(_) => 2,
            Error::Stage { source, .. } => match source.exit_code() {
                1 => 1,
                3 => 3,
                _ => 2,
            },
        }
    }
}
