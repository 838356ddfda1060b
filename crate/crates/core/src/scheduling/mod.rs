//! Node selection within each task's offloaded tier.
//!
//! All schedulers share the simulator's list-scheduling semantics, so an
//! assignment produced by any of them evaluates identically everywhere.
//! The four list heuristics are restricted to the pure time objective; the
//! search-based schedulers minimise a weighted, baseline-normalised
//! combination of makespan, device energy and cost.

mod brute;
mod fitness;
mod ga;
mod heuristics;
mod pso;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, NodeId};
use crate::error::{Error, Result};
use crate::offloading::OffloadingPlan;
use crate::sim::Problem;
use crate::workflow::{TaskId, WorkflowDag};

pub use brute::{brute_force_optimal, BRUTE_FORCE_LIMIT};
pub use fitness::{fitness, Fitness};
pub use ga::{next_generation, schedule_ga, GaParams};
pub use pso::{pso_step, schedule_pso, PsoParams};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub node_of: BTreeMap<TaskId, NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub w_time: f64,
    pub w_energy: f64,
    pub w_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<f64>,
}

impl Default for Objectives {
    fn default() -> Self {
        Objectives::time()
    }
}

impl Objectives {
    pub fn time() -> Self {
        Objectives { w_time: 1.0, w_energy: 0.0, w_cost: 0.0, deadline: None }
    }

    pub fn weighted(w_time: f64, w_energy: f64, w_cost: f64) -> Self {
        Objectives { w_time, w_energy, w_cost, deadline: None }
    }

    pub fn is_pure_time(&self) -> bool {
        self.w_time == 1.0 && self.w_energy == 0.0 && self.w_cost == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.w_time, self.w_energy, self.w_cost];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidObjectives(format!("weights must be >= 0, got {w:?}")));
        }
        if !w.iter().any(|x| *x > 0.0) {
            return Err(Error::InvalidObjectives("at least one weight must be positive".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidObjectives(format!("weights sum to {sum}, expected 1")));
        }
        if let Some(d) = self.deadline {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidObjectives(format!("deadline {d} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[serde(rename = "fcfs")]
    Fcfs,
    #[serde(rename = "round-robin")]
    RoundRobin,
    #[serde(rename = "min-min")]
    MinMin,
    #[serde(rename = "max-min")]
    MaxMin,
    #[serde(rename = "pso")]
    Pso,
    #[serde(rename = "ga")]
    Ga,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Fcfs,
        SchedulerKind::RoundRobin,
        SchedulerKind::MinMin,
        SchedulerKind::MaxMin,
        SchedulerKind::Pso,
        SchedulerKind::Ga,
    ];

    pub const HEURISTICS: [SchedulerKind; 4] =
        [SchedulerKind::Fcfs, SchedulerKind::RoundRobin, SchedulerKind::MinMin, SchedulerKind::MaxMin];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Fcfs => "fcfs",
            SchedulerKind::RoundRobin => "round-robin",
            SchedulerKind::MinMin => "min-min",
            SchedulerKind::MaxMin => "max-min",
            SchedulerKind::Pso => "pso",
            SchedulerKind::Ga => "ga",
        }
    }

    pub fn is_heuristic(self) -> bool {
        !matches!(self, SchedulerKind::Pso | SchedulerKind::Ga)
    }

    pub fn is_seeded(self) -> bool {
        !self.is_heuristic()
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "scheduler", value: s.to_string() })
    }
}

/// Hyperparameters for the search-based schedulers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerParams {
    pub pso: PsoParams,
    pub ga: GaParams,
}

impl SchedulerParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.pso.seed = seed;
        self.ga.seed = seed;
        self
    }
}

/// Rejects heuristic schedulers paired with anything but the pure time
/// objective.
pub fn check_compatibility(kind: SchedulerKind, objectives: &Objectives) -> Result<()> {
    objectives.validate()?;
    if kind.is_heuristic() && !objectives.is_pure_time() {
        return Err(Error::IncompatibleObjective(kind.name().to_string()));
    }
    Ok(())
}

/// Allowed node indices per topological position, each list in ascending
/// node-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub allowed: Vec<Vec<usize>>,
}

impl SearchSpace {
    pub fn new(problem: &Problem, plan: &OffloadingPlan) -> Result<Self> {
        let allowed = (0..problem.task_count())
            .map(|k| {
                let id = problem.task_id(k);
                let tier = plan.tier(id).ok_or_else(|| {
                    Error::InconsistentAssignment(format!("task `{id}` missing from offloading plan"))
                })?;
                let mut nodes: Vec<usize> =
                    (0..problem.env.nodes.len()).filter(|&n| problem.env.nodes[n].tier == tier).collect();
                if nodes.is_empty() {
                    return Err(Error::EmptyTier(tier));
                }
                nodes.sort_by(|&a, &b| problem.env.nodes[a].id.cmp(&problem.env.nodes[b].id));
                Ok(nodes)
            })
            .collect::<Result<_>>()?;
        Ok(SearchSpace { allowed })
    }

    pub fn size(&self) -> u128 {
        self.allowed.iter().map(|a| a.len() as u128).product()
    }

    /// Node vector from per-task indices into `allowed`.
    pub fn decode(&self, genes: &[usize]) -> Vec<usize> {
        genes.iter().zip(&self.allowed).map(|(&g, a)| a[g.min(a.len() - 1)]).collect()
    }

    /// Per-task indices into `allowed`; `None` if a node is not allowed.
    pub fn encode(&self, nodes: &[usize]) -> Option<Vec<usize>> {
        nodes.iter().zip(&self.allowed).map(|(n, a)| a.iter().position(|x| x == n)).collect()
    }
}

pub fn allowed_nodes(task: &str, plan: &OffloadingPlan, env: &Environment) -> Result<Vec<NodeId>> {
    let tier = plan
        .tier(task)
        .ok_or_else(|| Error::InconsistentAssignment(format!("task `{task}` missing from offloading plan")))?;
    let mut ids: Vec<NodeId> = env.nodes_in(tier).map(|n| n.id.clone()).collect();
    if ids.is_empty() {
        return Err(Error::EmptyTier(tier));
    }
    ids.sort();
    Ok(ids)
}

/// Every task must sit on a node of its offloaded tier.
pub fn check_assignment(assignment: &Assignment, plan: &OffloadingPlan, env: &Environment) -> Result<()> {
    for (task, tier) in &plan.tier_of {
        let node_id = assignment
            .node_of
            .get(task)
            .ok_or_else(|| Error::InconsistentAssignment(format!("task `{task}` is unassigned")))?;
        let node = env
            .node(node_id)
            .ok_or_else(|| Error::InconsistentAssignment(format!("task `{task}` on unknown node `{node_id}`")))?;
        if node.tier != *tier {
            return Err(Error::InconsistentAssignment(format!(
                "task `{task}` offloaded to {tier} but placed on {} node `{node_id}`",
                node.tier
            )));
        }
    }
    if assignment.node_of.len() != plan.tier_of.len() {
        return Err(Error::InconsistentAssignment("assignment covers tasks outside the plan".into()));
    }
    Ok(())
}

fn with_problem<T>(
    dag: &WorkflowDag,
    env: &Environment,
    plan: &OffloadingPlan,
    f: impl FnOnce(&Problem, &SearchSpace) -> Result<T>,
) -> Result<T> {
    let problem = Problem::new(dag, env)?;
    let space = SearchSpace::new(&problem, plan)?;
    f(&problem, &space)
}

pub fn schedule_fcfs(dag: &WorkflowDag, env: &Environment, plan: &OffloadingPlan) -> Result<Assignment> {
    with_problem(dag, env, plan, |p, s| Ok(p.assignment(&heuristics::fcfs(p, s)?)))
}

pub fn schedule_round_robin(dag: &WorkflowDag, env: &Environment, plan: &OffloadingPlan) -> Result<Assignment> {
    with_problem(dag, env, plan, |p, s| Ok(p.assignment(&heuristics::round_robin(p, s))))
}

pub fn schedule_min_min(dag: &WorkflowDag, env: &Environment, plan: &OffloadingPlan) -> Result<Assignment> {
    with_problem(dag, env, plan, |p, s| Ok(p.assignment(&heuristics::min_min(p, s)?)))
}

pub fn schedule_max_min(dag: &WorkflowDag, env: &Environment, plan: &OffloadingPlan) -> Result<Assignment> {
    with_problem(dag, env, plan, |p, s| Ok(p.assignment(&heuristics::max_min(p, s)?)))
}

/// Runs one scheduler after the objective compatibility gate.
pub fn schedule(
    kind: SchedulerKind,
    dag: &WorkflowDag,
    env: &Environment,
    plan: &OffloadingPlan,
    objectives: &Objectives,
    params: &SchedulerParams,
) -> Result<Assignment> {
    check_compatibility(kind, objectives)?;
    match kind {
        SchedulerKind::Fcfs => schedule_fcfs(dag, env, plan),
        SchedulerKind::RoundRobin => schedule_round_robin(dag, env, plan),
        SchedulerKind::MinMin => schedule_min_min(dag, env, plan),
        SchedulerKind::MaxMin => schedule_max_min(dag, env, plan),
        SchedulerKind::Pso => schedule_pso(dag, env, plan, objectives, &params.pso),
        SchedulerKind::Ga => schedule_ga(dag, env, plan, objectives, &params.ga),
    }
}

/// Heuristic node vectors used to seed PSO and GA populations: all four
/// heuristics under the pure time objective, FCFS alone otherwise.
pub(crate) fn heuristic_seeds(
    problem: &Problem,
    space: &SearchSpace,
    objectives: &Objectives,
) -> Result<Vec<Vec<usize>>> {
    let mut seeds = vec![heuristics::fcfs(problem, space)?];
    if objectives.is_pure_time() {
        seeds.push(heuristics::round_robin(problem, space));
        seeds.push(heuristics::min_min(problem, space)?);
        seeds.push(heuristics::max_min(problem, space)?);
    }
    Ok(seeds)
}

/// Parallel fitness evaluation with results in input order.
pub(crate) fn evaluate_all(f: &Fitness, space: &SearchSpace, genes: &[Vec<usize>]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if f.problem().task_count() * genes.len() < 256 {
        genes.iter().map(|g| f.eval(&space.decode(g))).collect()
    } else {
        genes.par_iter().map(|g| f.eval(&space.decode(g))).collect()
    }
}
