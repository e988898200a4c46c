use thiserror::Error;

use crate::graph::AgentId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {0} is not part of the graph")]
    UnknownAgent(AgentId),

    #[error("no priority assigned to agent {0}")]
    MissingPriority(AgentId),

    #[error("coupled agents {0} and {1} share the same priority")]
    InvalidPrioritization(AgentId, AgentId),

    #[error("self-loop on agent {0}")]
    SelfLoop(AgentId),

    #[error("graph is no DAG")]
    NotADag,

    #[error("{what}: size {size} exceeds the enumeration limit {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("computation sequence does not partition agents 1..={n_agents}: {reason}")]
    NotAPartition { n_agents: usize, reason: String },

    #[error("schedule matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NonSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("class {class} does not appear in slot {slot} of the schedule")]
    ScheduleIntegrity { class: usize, slot: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("degenerate polygon with {0} vertices")]
    DegeneratePolygon(usize),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("scenario validation failed: {0}")]
    Scenario(String),

    #[error("collision between vehicles {a} and {b} at step {step}, sample {sample}")]
    CollisionAudit {
        step: usize,
        sample: usize,
        a: AgentId,
        b: AgentId,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownAgent(_) | Error::MissingPriority(_) | Error::NotAPartition { .. } => {
                "domain"
            }
            Error::InvalidPrioritization(..) => "precondition",
            Error::NotADag => "not_a_dag",
            Error::SelfLoop(_) => "domain",
            Error::Capacity { .. } => "capacity",
            Error::NonSquare { .. } | Error::LengthMismatch { .. } => "domain",
            Error::DegeneratePolygon(_) => "domain",
            Error::ScheduleIntegrity { .. } => "integrity",
            Error::Config(_) => "config",
            Error::Scenario(_) => "scenario",
            Error::CollisionAudit { .. } => "collision",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
