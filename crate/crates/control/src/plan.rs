//! Plan requests and execution plans.

use edgeflow_core::executor::calibration::CalibrationConfig;
use edgeflow_core::scheduling::check_compatibility;
use edgeflow_core::workflow::{bind_tasks_with, generate_montage, generate_pattern, parse_dax, PatternKind};
use edgeflow_core::{
    BindingKind, Environment, EnvironmentConfig, Objectives, OffloadingStrategy, SchedulerKind, SchedulerParams,
    WorkflowDag,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Where a plan's workflow comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkflowSource {
    Montage {
        width: usize,
        #[serde(default = "one")]
        length_profile: f64,
        #[serde(default = "one")]
        data_profile: f64,
    },
    Pattern {
        pattern: PatternKind,
        tasks: usize,
        #[serde(default)]
        seed: u64,
    },
    /// DAX XML text.
    Dax { xml: String },
    /// A workflow in its native document form.
    Dag { dag: WorkflowDag },
}

fn one() -> f64 {
    1.0
}

impl WorkflowSource {
    pub fn materialize(&self) -> Result<WorkflowDag> {
        let dag = match self {
            WorkflowSource::Montage { width, length_profile, data_profile } => {
                generate_montage(*width, *length_profile, *data_profile)?
            }
            WorkflowSource::Pattern { pattern, tasks, seed } => generate_pattern(*pattern, *tasks, *seed)?,
            WorkflowSource::Dax { xml } => parse_dax(xml)?,
            WorkflowSource::Dag { dag } => {
                dag.validate()?;
                dag.clone()
            }
        };
        Ok(dag)
    }
}

fn default_binding() -> BindingKind {
    BindingKind::PiCalculation
}

fn default_scheduler() -> SchedulerKind {
    SchedulerKind::Ga
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    #[serde(default)]
    pub name: Option<String>,
    pub workflow: WorkflowSource,
    /// Built-in task given to every task that has no binding yet.
    #[serde(default = "default_binding")]
    pub binding: BindingKind,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub strategy: OffloadingStrategy,
    #[serde(default = "default_scheduler")]
    pub scheduler: SchedulerKind,
    #[serde(default)]
    pub params: SchedulerParams,
    #[serde(default)]
    pub objectives: Objectives,
    /// Default seed of the plan's simulations.
    #[serde(default)]
    pub seed: u64,
}

impl PlanRequest {
    pub fn new(workflow: WorkflowSource) -> Self {
        PlanRequest {
            name: None,
            workflow,
            binding: default_binding(),
            calibration: CalibrationConfig::default(),
            environment: EnvironmentConfig::default(),
            strategy: OffloadingStrategy::default(),
            scheduler: default_scheduler(),
            params: SchedulerParams::default(),
            objectives: Objectives::time(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub id: String,
    pub name: String,
    pub workflow: WorkflowDag,
    pub environment: Environment,
    pub strategy: OffloadingStrategy,
    pub scheduler: SchedulerKind,
    pub params: SchedulerParams,
    pub objectives: Objectives,
    pub seed: u64,
    /// Unix seconds.
    pub created_at: u64,
}

/// Everything of a plan except its identity, validated.
pub struct PlanContent {
    pub workflow: WorkflowDag,
    pub environment: Environment,
}

/// Materializes and validates a request without persisting anything.
pub fn materialize(request: &PlanRequest) -> Result<PlanContent> {
    request.objectives.validate()?;
    check_compatibility(request.scheduler, &request.objectives)?;
    request.params.pso.validate()?;
    request.params.ga.validate()?;
    let dag = request.workflow.materialize()?;
    let workflow = bind_tasks_with(&dag, request.binding, &request.calibration);
    let environment = request.environment.build()?;
    Ok(PlanContent { workflow, environment })
}
