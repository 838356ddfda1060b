//! Workflow scheduling across a device, edge and cloud continuum: workflow
//! models, environment and cost models, tier offloading, node scheduling,
//! discrete-event simulation and real execution of built-in tasks.

pub mod environment;
pub mod error;
pub mod executor;
pub mod offloading;
pub mod scheduling;
pub mod sim;
pub mod workflow;

pub use environment::{Environment, EnvironmentConfig, NodeId, NodeSpec, Tier};
pub use error::{Error, Result};
pub use offloading::{offload, OffloadingPlan, OffloadingStrategy};
pub use scheduling::{schedule, Assignment, Objectives, SchedulerKind, SchedulerParams};
pub use sim::{simulate, Metrics, Schedule};
pub use workflow::{BindingKind, DataEdge, TaskBinding, TaskId, TaskSpec, WorkflowDag};
