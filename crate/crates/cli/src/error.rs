use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed report {path}: {source}")]
    Report {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("plot: {0}")]
    Plot(String),

    #[error(transparent)]
    Core(#[from] hodgelab_core::Error),
}

impl CliError {
    /// `2` for anything the user must fix in the input, `1` otherwise.
    pub fn exit_code(&self) -> u8 {
        use hodgelab_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } | CliError::Report { .. } => 2,
            CliError::Plot(_) => 2,
            CliError::Core(e) => match e {
                E::UnsupportedModel(_)
                | E::InvalidInput(_)
                | E::Precondition(_)
                | E::DegenerateCurve(_)
                | E::UnsupportedConfiguration(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
