use thiserror::Error;

use crate::environment::Tier;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed workflow XML: {0}")]
    MalformedXml(String),
    #[error("dependency references unknown job `{0}`")]
    UnknownJobReference(String),
    #[error("workflow contains a cycle through task `{0}`")]
    CyclicWorkflow(String),
    #[error("negative size `{value}` on file `{file}`")]
    NegativeSize { file: String, value: String },
    #[error("invalid workflow: {0}")]
    InvalidWorkflow(String),
    #[error("invalid Montage width {0} (need at least 2)")]
    InvalidWidth(usize),
    #[error("invalid task count {n} for {kind} pattern")]
    InvalidCount { kind: &'static str, n: usize },

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("no network link between {0:?} and {1:?}")]
    MissingLink(Tier, Tier),

    #[error("no {0:?} nodes available")]
    EmptyTier(Tier),
    #[error("invalid objectives: {0}")]
    InvalidObjectives(String),
    #[error("scheduler `{0}` only supports a pure time objective (w_time = 1)")]
    IncompatibleObjective(String),
    #[error("invalid scheduler parameters: {0}")]
    InvalidParams(String),
    #[error("search space of {0} assignments exceeds the brute-force guard")]
    SearchSpaceTooLarge(u128),
    #[error("inconsistent assignment: {0}")]
    InconsistentAssignment(String),

    #[error("task `{0}` has no executable binding")]
    UnboundTask(String),
    #[error("worker pool unavailable: {0}")]
    WorkerPoolUnavailable(String),
    #[error("task panicked: {0}")]
    TaskPanic(String),

    #[error("unknown {kind} `{value}`")]
    UnknownName { kind: &'static str, value: String },
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedXml(_) => "MalformedXml",
            Error::UnknownJobReference(_) => "UnknownJobReference",
            Error::CyclicWorkflow(_) => "CyclicWorkflow",
            Error::NegativeSize { .. } => "NegativeSize",
            Error::InvalidWorkflow(_) => "InvalidWorkflow",
            Error::InvalidWidth(_) => "InvalidWidth",
            Error::InvalidCount { .. } => "InvalidCount",
            Error::InvalidEnvironment(_) => "InvalidEnvironment",
            Error::MissingLink(..) => "MissingLink",
            Error::EmptyTier(_) => "EmptyTier",
            Error::InvalidObjectives(_) => "InvalidObjectives",
            Error::IncompatibleObjective(_) => "IncompatibleObjective",
            Error::InvalidParams(_) => "InvalidParams",
            Error::SearchSpaceTooLarge(_) => "SearchSpaceTooLarge",
            Error::InconsistentAssignment(_) => "InconsistentAssignment",
            Error::UnboundTask(_) => "UnboundTask",
            Error::WorkerPoolUnavailable(_) => "WorkerPoolUnavailable",
            Error::TaskPanic(_) => "TaskPanic",
            Error::UnknownName { .. } => "UnknownName",
        }
    }
}
