//! Control plane for edgeflow: builds and persists execution plans,
//! simulates them, runs them on the local worker pool, and serves reports,
//! comparisons and live run events over HTTP and a command line.

pub mod cli;
pub mod error;
pub mod http;
pub mod plan;
pub mod service;
pub mod store;

pub use error::{ControlError, ErrorBody, Result};
pub use plan::{ExecutionPlan, PlanRequest, WorkflowSource};
pub use service::{BarDataset, BarRow, CompareRequest, Controller, Report, RunDocument, SimulationResult};
pub use store::Store;
