use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] levy_passage::Error),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("malformed artifact {path}: {msg}")]
    Artifact { path: PathBuf, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("{0} oracle comparison(s) outside tolerance")]
    OracleMismatch(usize),
}

impl CliError {
    /// 2: configuration, 3: solver or numerical failure (including oracle
    /// mismatches), 4: violated contract or precondition, 1: I/O.
    pub fn exit_code(&self) -> i32 {
        use levy_passage::Error as E;
        match self {
            CliError::Core(E::Config { .. }) | CliError::Read { .. } | CliError::Usage(_) => 2,
            CliError::Core(E::Solver { .. } | E::Numerical { .. } | E::Range { .. }) => 3,
            CliError::OracleMismatch(_) => 3,
            CliError::Core(E::Contract { .. } | E::Domain { .. } | E::Size { .. }) => 4,
            CliError::Write { .. } | CliError::Artifact { .. } => 1,
        }
    }
}
