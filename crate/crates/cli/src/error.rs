use std::path::PathBuf;

use havok_core::error::ErrorKind;
use havok_core::HavokError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A failure inside the numerical core, tagged with the stage that raised it.
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: HavokError,
    },

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn core(context: &'static str) -> impl FnOnce(HavokError) -> CliError {
        move |source| CliError::Core { context, source }
    }

    /// Process exit status: 2 configuration, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } => match source.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            },
            CliError::Config(_) => 2,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Csv { .. } => 3,
            CliError::Json(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
