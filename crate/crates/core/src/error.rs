use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants split into two families that map onto process exit codes:
/// input/validation problems and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid at layer {layer}, row {row}, col {col}: {reason}")]
    InvalidCell {
        layer: usize,
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("missing variable `{variable}` at station `{station}` and its donor")]
    MissingVariable { station: String, variable: String },

    #[error("system is singular: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} iterations (max |dh| = {residual:.3e} m)")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Hessian is not positive definite (eigenvalue {eigenvalue:.3e} along {direction})")]
    NotPositiveDefinite { eigenvalue: f64, direction: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::NotConverged { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Numerical(_)
        )
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
