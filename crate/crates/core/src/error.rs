use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("placement failed: {0}")]
    Plan(#[from] PlanError),

    #[error("invalid placement instance: {0}")]
    Instance(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Reasons a single replication plan cannot be produced.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("utility table is empty, nothing has been learned yet")]
    EmptyTable,
    #[error("replication degree {requested} exceeds the {available} eligible virtual nodes")]
    DegreeInfeasible { requested: usize, available: usize },
    #[error("knowledge base of owner {0} is empty")]
    EmptyKnowledge(usize),
    #[error("no feasible replica set for the region instance")]
    NoFeasibleSet,
}
