use std::path::PathBuf;

use thiserror::Error;

use crate::graph::AgentId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph parameters: {0}")]
    InvalidGraph(String),

    #[error("agent {id} is outside 1..={n}")]
    UnknownAgent { id: AgentId, n: usize },

    #[error("self-loop on agent {0}")]
    SelfLoop(AgentId),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(AgentId, AgentId),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("vertex set must be nonempty")]
    EmptySet,

    #[error("enumeration over {size} vertices exceeds the cap of {cap} (use force to override)")]
    CapExceeded { size: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error at {pointer}: {msg}")]
    Config { pointer: String, msg: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("counterexample search exhausted {attempts} attempts without a valid graph")]
    SearchExhausted { attempts: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(pointer: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
