use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Core(#[from] cgpcox::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for numerical failures, 4 for infeasibility.
    pub fn exit_code(&self) -> i32 {
        use cgpcox::Error as E;
        match self {
            CliError::Core(E::Infeasible(_)) => 4,
            CliError::Core(
                E::Conditioning(_)
                | E::Divergence(_)
                | E::DominatingBound { .. }
                | E::EstimationFailure(_)
                | E::DegenerateReference(_),
            ) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        CliError::Csv { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
