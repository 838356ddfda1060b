use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::offloading::OffloadingPlan;
use crate::sim::{Metrics, Problem};
use crate::workflow::WorkflowDag;

use super::{heuristics, Assignment, Fitness, Objectives, SearchSpace};

/// Largest number of assignments the exhaustive search will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 100_000;

/// Exhaustive minimiser of the fitness over every tier-respecting
/// assignment. Ties go to the lexicographically smallest vector of
/// allowed-node indices (tasks in topological order).
pub fn brute_force_optimal(
    dag: &WorkflowDag,
    env: &Environment,
    plan: &OffloadingPlan,
    objectives: &Objectives,
) -> Result<(Assignment, Metrics)> {
    objectives.validate()?;
    let problem = Problem::new(dag, env)?;
    let space = SearchSpace::new(&problem, plan)?;
    let size = space.size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge(size));
    }
    let baseline = problem.evaluate(&heuristics::fcfs(&problem, &space)?)?;
    let fitness = Fitness::new(&problem, *objectives, baseline);

    let sizes: Vec<usize> = space.allowed.iter().map(Vec::len).collect();
    let mut genes = vec![0usize; sizes.len()];
    let mut best: Option<(f64, Vec<usize>, Metrics)> = None;
    loop {
        let nodes = space.decode(&genes);
        let metrics = problem.evaluate(&nodes)?;
        let score = fitness.score(&metrics);
        if best.as_ref().is_none_or(|(s, ..)| score < *s) {
            best = Some((score, nodes, metrics));
        }
        // Odometer increment, last position fastest: lexicographic order.
        let mut d = sizes.len();
        loop {
            if d == 0 {
                let (_, nodes, metrics) = best.expect("at least one assignment");
                return Ok((problem.assignment(&nodes), metrics));
            }
            d -= 1;
            genes[d] += 1;
            if genes[d] < sizes[d] {
                break;
            }
            genes[d] = 0;
        }
    }
}
