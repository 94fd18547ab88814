use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown user '{0}'")]
    UnknownUser(String),

    #[error("duplicate user id '{0}'")]
    DuplicateUser(String),

    #[error("same-side edge {from} -> {to}")]
    SameSideEdge { from: String, to: String },

    #[error("self edge on '{0}'")]
    SelfEdge(String),

    #[error("users '{0}' and '{1}' are on opposite sides")]
    OppositeSides(String, String),

    #[error("users '{0}' and '{1}' are on the same side")]
    SameSide(String, String),

    #[error("no matches available to hold out")]
    NoMatches,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid profile '{id}': {message}")]
    InvalidProfile { id: String, message: String },

    #[error("empty recommendation set")]
    EmptyRecommendations,

    #[error("held-out match set is empty")]
    EmptyHeldout,

    #[error("all allocations are zero")]
    ZeroAllocation,

    #[error("protected class {0} is empty")]
    EmptyProtectedClass(u8),

    #[error("instance too large for exhaustive search ({slots} slots, limit {limit})")]
    InstanceTooLarge { slots: usize, limit: usize },

    #[error("non-finite subgradient at iteration {0}")]
    NonFiniteGradient(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
