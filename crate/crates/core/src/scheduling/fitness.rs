use crate::environment::Environment;
use crate::error::Result;
use crate::sim::{Metrics, Problem};
use crate::workflow::WorkflowDag;

use super::{Assignment, Objectives};

/// Weighted sum of makespan, energy and cost, each divided by its baseline
/// value. Lower is better; the baseline itself scores the weight sum.
#[derive(Debug, Clone)]
pub struct Fitness<'p, 'a> {
    problem: &'p Problem<'a>,
    objectives: Objectives,
    baseline: Metrics,
}

impl<'p, 'a> Fitness<'p, 'a> {
    /// Zero baseline components are replaced by 1.
    pub fn new(problem: &'p Problem<'a>, objectives: Objectives, baseline: Metrics) -> Self {
        let nonzero = |x: f64| if x > 0.0 { x } else { 1.0 };
        let baseline = Metrics {
            makespan: nonzero(baseline.makespan),
            energy: nonzero(baseline.energy),
            cost: nonzero(baseline.cost),
        };
        Fitness { problem, objectives, baseline }
    }

    pub fn problem(&self) -> &'p Problem<'a> {
        self.problem
    }

    pub fn score(&self, m: &Metrics) -> f64 {
        let o = &self.objectives;
        o.w_time * m.makespan / self.baseline.makespan
            + o.w_energy * m.energy / self.baseline.energy
            + o.w_cost * m.cost / self.baseline.cost
    }

    pub fn eval(&self, nodes: &[usize]) -> Result<f64> {
        Ok(self.score(&self.problem.evaluate(nodes)?))
    }
}

pub fn fitness(
    dag: &WorkflowDag,
    env: &Environment,
    assignment: &Assignment,
    objectives: &Objectives,
    baseline: &Metrics,
) -> Result<f64> {
    let problem = Problem::new(dag, env)?;
    let nodes = problem.node_vector(assignment)?;
    Fitness::new(&problem, *objectives, *baseline).eval(&nodes)
}
