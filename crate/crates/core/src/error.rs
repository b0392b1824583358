use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the laboratory.
///
/// Variants map onto the CLI exit codes: `Config`/`Parse` exit with 2,
/// `Regime`/`Consistency` with 3 and `Io` with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("could not parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    /// A precondition of a bound or construction does not hold. `condition`
    /// names the violated inequality.
    #[error("regime violation in {op}: {condition}")]
    Regime { op: &'static str, condition: String },

    /// A guaranteed internal invariant failed to hold.
    #[error("internal consistency violation in {op}: {detail}")]
    Consistency { op: &'static str, detail: String },

    #[error("numerical routine did not converge in {op}: {detail}")]
    NonConvergence { op: &'static str, detail: String },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn regime(op: &'static str, condition: impl Into<String>) -> Self {
        Error::Regime {
            op,
            condition: condition.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Regime { .. } | Error::Consistency { .. } | Error::NonConvergence { .. } => 3,
            Error::Io { .. } => 4,
            Error::Trial { source, .. } => source.exit_code(),
        }
    }
}
