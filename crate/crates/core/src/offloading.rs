//! Per-task tier placement ahead of scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{exec_time, transfer_time, Environment, Tier};
use crate::error::{Error, Result};
use crate::workflow::{TaskId, TaskSpec, WorkflowDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffloadingStrategy {
    #[default]
    EnergyOptimal,
    AllInEdge,
    AllInCloud,
}

impl OffloadingStrategy {
    pub const ALL: [OffloadingStrategy; 3] =
        [OffloadingStrategy::EnergyOptimal, OffloadingStrategy::AllInEdge, OffloadingStrategy::AllInCloud];

    pub fn name(self) -> &'static str {
        match self {
            OffloadingStrategy::EnergyOptimal => "energy-optimal",
            OffloadingStrategy::AllInEdge => "all-in-edge",
            OffloadingStrategy::AllInCloud => "all-in-cloud",
        }
    }
}

impl fmt::Display for OffloadingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OffloadingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OffloadingStrategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "offloading strategy", value: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OffloadingPlan {
    pub tier_of: BTreeMap<TaskId, Tier>,
}

impl OffloadingPlan {
    pub fn tier(&self, task: &str) -> Option<Tier> {
        self.tier_of.get(task).copied()
    }
}

pub fn offload(dag: &WorkflowDag, env: &Environment, strategy: OffloadingStrategy) -> Result<OffloadingPlan> {
    let mut tier_of = BTreeMap::new();
    for task in &dag.tasks {
        let tier = match strategy {
            OffloadingStrategy::AllInEdge => Tier::Edge,
            OffloadingStrategy::AllInCloud => Tier::Cloud,
            OffloadingStrategy::EnergyOptimal => {
                let mut best = (Tier::Device, device_energy_estimate(dag, task, Tier::Device, env)?);
                for tier in [Tier::Edge, Tier::Cloud] {
                    let energy = device_energy_estimate(dag, task, tier, env)?;
                    if energy < best.1 {
                        best = (tier, energy);
                    }
                }
                best.0
            }
        };
        tier_of.insert(task.id.clone(), tier);
    }
    Ok(OffloadingPlan { tier_of })
}

/// Joules the origin device spends if `task` runs on `tier`, estimated in
/// isolation on the fastest node of that tier. Local execution costs run
/// power; offloading costs upload, idle wait and result download.
pub fn device_energy_estimate(dag: &WorkflowDag, task: &TaskSpec, tier: Tier, env: &Environment) -> Result<f64> {
    let origin = env.origin();
    let target = env.fastest_in(tier).ok_or(Error::EmptyTier(tier))?;
    let run = exec_time(task, target);
    if tier == Tier::Device {
        return Ok(origin.p_run * run / 1000.0);
    }
    let up = transfer_time(dag.input_payload(&task.id), origin, target, &env.network)?;
    let down = transfer_time(dag.output_payload(&task.id), target, origin, &env.network)?;
    Ok((origin.p_tx * up + origin.p_idle * run + origin.p_rx * down) / 1000.0)
}
