use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("missing artifact {}; run `vecont {stage}` first", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("network: {0}")]
    Network(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) | Self::Stage(_) | Self::Io { .. } => 1,
            Self::MissingArtifact { .. } => 2,
            Self::Network(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, e: impl ToString) -> Self {
        Self::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    pub(crate) fn stage(e: impl ToString) -> Self {
        Self::Stage(e.to_string())
    }
}
