use serde::Serialize;

pub type Result<T, E = ControlError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ControlError {
    #[error(transparent)]
    Core(#[from] edgeflow_core::Error),
    #[error("plan `{0}` not found")]
    PlanNotFound(String),
    #[error("run `{0}` not found")]
    RunNotFound(String),
    #[error("plan `{0}` has no simulation for seed {1}")]
    PlanNotSimulated(String, u64),
    #[error("plan `{plan}` already has active run `{run}`")]
    RunAlreadyActive { plan: String, run: String },
    #[error("run `{0}` has not finished")]
    RunNotTerminal(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("run `{run}` ended with outcome {outcome}")]
    RunFailed { run: String, outcome: String },
    #[error("store error: {0}")]
    Storage(String),
}

impl ControlError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ControlError::Core(e) => e.code(),
            ControlError::PlanNotFound(_) => "PlanNotFound",
            ControlError::RunNotFound(_) => "RunNotFound",
            ControlError::PlanNotSimulated(..) => "PlanNotSimulated",
            ControlError::RunAlreadyActive { .. } => "RunAlreadyActive",
            ControlError::RunNotTerminal(_) => "RunNotTerminal",
            ControlError::InvalidRequest(_) => "InvalidRequest",
            ControlError::RunFailed { .. } => "RunFailed",
            ControlError::Storage(_) => "StorageError",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { error: ErrorDetail { code: self.code().to_string(), message: self.to_string() } }
    }
}

impl From<std::io::Error> for ControlError {
    fn from(e: std::io::Error) -> Self {
        ControlError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for ControlError {
    fn from(e: serde_json::Error) -> Self {
        ControlError::Storage(e.to_string())
    }
}

/// Error document returned by the API and printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}
