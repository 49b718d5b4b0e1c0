use std::path::PathBuf;

use thiserror::Error;

/// Failures mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, malformed input data, unparsable queries.
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// An artifact file exists but cannot be read back.
    #[error("{}: {message}", path.display())]
    Load { path: PathBuf, message: String },
    #[error(transparent)]
    Core(som_cwm::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } | CliError::Load { .. } => 2,
            // specificity cycles and order violations are semantic failures
            CliError::Core(e) => match e {
                som_cwm::Error::SpecificityCycle { .. } | som_cwm::Error::Inconsistent(_) => 3,
                _ => 1,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<som_cwm::Error> for CliError {
    fn from(e: som_cwm::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
