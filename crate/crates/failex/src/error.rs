use std::io;
use std::path::PathBuf;

use failex_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    /// Malformed file contents or command-line values.
    #[error("{0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit status for an error.
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_NO_SOLUTION: u8 = 4;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(e) => core_exit_code(e),
            _ => EXIT_INPUT,
        }
    }
}

fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::DegenerateTest { .. } => EXIT_DEGENERATE,
        CoreError::NoSolution { .. } => EXIT_NO_SOLUTION,
        CoreError::Row { source, .. } => core_exit_code(source),
        _ => EXIT_INPUT,
    }
}
