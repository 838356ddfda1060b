//! Particle swarm search over node indices.
//!
//! A position holds one real coordinate per task in `[0, m)`, where `m` is
//! the number of allowed nodes; it decodes by flooring. Velocities are
//! clamped to `±m/2` and positions to `[0, m - eps]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::offloading::OffloadingPlan;
use crate::sim::Problem;
use crate::workflow::WorkflowDag;

use super::{evaluate_all, heuristic_seeds, heuristics, Assignment, Fitness, Objectives, SearchSpace};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub particles: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        PsoParams { particles: 30, c1: 2.0, c2: 2.0, inertia: 1.0, iterations: 100, seed: 0 }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 1 || self.iterations < 1 {
            return Err(Error::InvalidParams("pso needs particles >= 1 and iterations >= 1".into()));
        }
        if ![self.c1, self.c2, self.inertia].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParams("pso coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// One coordinate update: `v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`,
/// then `x <- x + v`, both clamped for a dimension with `m` choices.
#[allow(clippy::too_many_arguments)]
pub fn pso_step(x: &mut f64, v: &mut f64, pbest: f64, gbest: f64, r1: f64, r2: f64, params: &PsoParams, m: usize) {
    let limit = m as f64 / 2.0;
    let next = params.inertia * *v + params.c1 * r1 * (pbest - *x) + params.c2 * r2 * (gbest - *x);
    *v = next.clamp(-limit, limit);
    *x = (*x + *v).clamp(0.0, m as f64 - EPS);
}

fn decode(position: &[f64]) -> Vec<usize> {
    position.iter().map(|&x| x.floor() as usize).collect()
}

pub(crate) fn search(
    problem: &Problem,
    space: &SearchSpace,
    objectives: &Objectives,
    params: &PsoParams,
) -> Result<(Vec<usize>, f64)> {
    params.validate()?;
    let dims = problem.task_count();
    let sizes: Vec<usize> = space.allowed.iter().map(Vec::len).collect();
    let baseline = problem.evaluate(&heuristics::fcfs(problem, space)?)?;
    let fitness = Fitness::new(problem, *objectives, baseline);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let seeds = heuristic_seeds(problem, space, objectives)?;
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(params.particles);
    for nodes in seeds.iter().take(params.particles) {
        let genes = space.encode(nodes).expect("heuristics respect tiers");
        positions.push(genes.iter().map(|&g| g as f64 + 0.5).collect());
    }
    while positions.len() < params.particles {
        positions.push(sizes.iter().map(|&m| rng.gen_range(0.0..m as f64)).collect());
    }
    let mut velocities: Vec<Vec<f64>> = (0..params.particles)
        .map(|_| {
            sizes
                .iter()
                .map(|&m| {
                    let limit = m as f64 / 2.0;
                    rng.gen_range(-limit..=limit)
                })
                .collect()
        })
        .collect();

    let scores = evaluate_all(&fitness, space, &positions.iter().map(|p| decode(p)).collect::<Vec<_>>())?;
    let mut pbest = positions.clone();
    let mut pbest_score = scores.clone();
    let mut gbest_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[gbest_index] {
            gbest_index = i;
        }
    }
    let mut gbest = positions[gbest_index].clone();
    let mut gbest_score = scores[gbest_index];

    for _ in 0..params.iterations {
        for ((x, v), p) in positions.iter_mut().zip(velocities.iter_mut()).zip(&pbest) {
            for d in 0..dims {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                pso_step(&mut x[d], &mut v[d], p[d], gbest[d], r1, r2, params, sizes[d]);
            }
        }
        let scores = evaluate_all(&fitness, space, &positions.iter().map(|p| decode(p)).collect::<Vec<_>>())?;
        for (i, &s) in scores.iter().enumerate() {
            if s < pbest_score[i] {
                pbest_score[i] = s;
                pbest[i].clone_from(&positions[i]);
            }
            if s < gbest_score {
                gbest_score = s;
                gbest.clone_from(&positions[i]);
            }
        }
    }
    Ok((space.decode(&decode(&gbest)), gbest_score))
}

pub fn schedule_pso(
    dag: &WorkflowDag,
    env: &Environment,
    plan: &OffloadingPlan,
    objectives: &Objectives,
    params: &PsoParams,
) -> Result<Assignment> {
    objectives.validate()?;
    let problem = Problem::new(dag, env)?;
    let space = SearchSpace::new(&problem, plan)?;
    let (nodes, _) = search(&problem, &space, objectives, params)?;
    Ok(problem.assignment(&nodes))
}
