use std::path::{Path, PathBuf};

/// Failures surfaced by the command-line front end, each tied to an exit
/// code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] smtplace_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub const EXIT_USAGE: i32 = 1;
    pub const EXIT_INFEASIBLE: i32 = 2;
    pub const EXIT_IO: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Input { .. } => Self::EXIT_USAGE,
            Self::Core(smtplace_core::Error::Infeasible { .. }) | Self::Infeasible(_) => {
                Self::EXIT_INFEASIBLE
            }
            Self::Core(_) => Self::EXIT_USAGE,
            Self::Io { .. } => Self::EXIT_IO,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        Self::Input {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
