use std::path::Path;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// A malformed or inconsistent record in an input file.
    #[error("{file}:{line}: field `{field}`: {message}")]
    Parse {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    /// The data has zero likelihood under the inheritance model.
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(
        file: impl AsRef<Path>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            file: file.as_ref().display().to_string(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// Usage errors (code 2) are raised by the argument parser before any of
    /// these variants can occur.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Io { .. } | Error::Contract(_) => 3,
            Error::DegenerateEvidence(_) | Error::Numeric(_) => 4,
        }
    }
}
