use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes of the command line tool.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerics(#[from] qpdg_core::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use qpdg_core::Error as E;
        match self {
            Error::Numerics(
                E::NewtonDivergence { .. } | E::StepDivergence { .. } | E::Singular(_) | E::NotPositiveDefinite(_),
            ) => exit::DIVERGENCE,
            _ => exit::CONFIG,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
