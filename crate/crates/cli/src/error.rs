use std::path::{Path, PathBuf};

use thiserror::Error;

use seizure_core::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// An input file exists but cannot be decoded.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl ToString) -> Self {
        Self::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// 1 for configuration and data validation, 2 for file system and
    /// decoding problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Pipeline(_) => 1,
            CliError::Io { .. } | CliError::Format { .. } => 2,
        }
    }
}

macro_rules! pipeline_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Pipeline(e.into())
            }
        }
    )*};
}

pipeline_from!(
    seizure_core::eval::EvalError,
    seizure_core::features::FeatureError,
    seizure_core::nn::NnError
);
