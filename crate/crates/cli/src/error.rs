use std::path::PathBuf;

use thiserror::Error;

use duognn_core::data::DataError;
use duognn_core::decouple::DecoupleError;
use duognn_core::nn::NnError;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(DataError),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::SplitTooLarge { .. }
            | DataError::TooManyPairs { .. }
            | DataError::InvalidSbm(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other),
        }
    }
}

impl From<DecoupleError> for CliError {
    fn from(e: DecoupleError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            NnError::Data(d) => d.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
