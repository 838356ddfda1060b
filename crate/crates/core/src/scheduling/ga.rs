//! Genetic search over allowed-node indices: elitism, binary tournament,
//! single-point crossover and per-gene resample mutation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::offloading::OffloadingPlan;
use crate::sim::Problem;
use crate::workflow::WorkflowDag;

use super::{evaluate_all, heuristic_seeds, heuristics, Assignment, Fitness, Objectives, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub iterations: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams { population: 50, crossover_rate: 0.8, mutation_rate: 0.1, iterations: 100, elitism: 1, seed: 0 }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParams("ga population must be >= 2".into()));
        }
        if self.elitism < 1 || self.elitism >= self.population {
            return Err(Error::InvalidParams("ga elitism must be in [1, population)".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParams("ga iterations must be >= 1".into()));
        }
        for (name, p) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("ga {name} {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Produces the next population's chromosomes. The first `elitism` entries
/// are the current best individuals (ties to the lower index), unchanged.
pub fn next_generation<R: Rng>(
    population: &[Vec<usize>],
    scores: &[f64],
    sizes: &[usize],
    params: &GaParams,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let n = population.len();
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut next: Vec<Vec<usize>> = ranked.iter().take(params.elitism).map(|&i| population[i].clone()).collect();

    let tournament = |rng: &mut R| {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if scores[b] < scores[a] || (scores[b] == scores[a] && b < a) {
            b
        } else {
            a
        }
    };

    while next.len() < n {
        let p1 = tournament(rng);
        let p2 = tournament(rng);
        let mut c1 = population[p1].clone();
        let mut c2 = population[p2].clone();
        if rng.gen::<f64>() < params.crossover_rate && c1.len() >= 2 {
            let cut = rng.gen_range(1..c1.len());
            c1[cut..].swap_with_slice(&mut c2[cut..]);
        }
        for child in [&mut c1, &mut c2] {
            for (gene, &m) in child.iter_mut().zip(sizes) {
                if rng.gen::<f64>() < params.mutation_rate {
                    *gene = rng.gen_range(0..m);
                }
            }
        }
        next.push(c1);
        if next.len() < n {
            next.push(c2);
        }
    }
    next
}

pub(crate) fn search(
    problem: &Problem,
    space: &SearchSpace,
    objectives: &Objectives,
    params: &GaParams,
) -> Result<(Vec<usize>, f64)> {
    params.validate()?;
    let sizes: Vec<usize> = space.allowed.iter().map(Vec::len).collect();
    let baseline = problem.evaluate(&heuristics::fcfs(problem, space)?)?;
    let fitness = Fitness::new(problem, *objectives, baseline);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut population: Vec<Vec<usize>> = heuristic_seeds(problem, space, objectives)?
        .iter()
        .take(params.population)
        .map(|nodes| space.encode(nodes).expect("heuristics respect tiers"))
        .collect();
    while population.len() < params.population {
        population.push(sizes.iter().map(|&m| rng.gen_range(0..m)).collect());
    }
    let mut scores = evaluate_all(&fitness, space, &population)?;

    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let mut best_genes = population[best].clone();
    let mut best_score = scores[best];

    for _ in 0..params.iterations {
        let next = next_generation(&population, &scores, &sizes, params, &mut rng);
        let mut ranked: Vec<usize> = (0..scores.len()).collect();
        ranked.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let elite_scores: Vec<f64> = ranked.iter().take(params.elitism).map(|&i| scores[i]).collect();
        let fresh = evaluate_all(&fitness, space, &next[params.elitism..])?;
        scores = elite_scores.into_iter().chain(fresh).collect();
        population = next;
        for (i, &s) in scores.iter().enumerate() {
            if s < best_score {
                best_score = s;
                best_genes.clone_from(&population[i]);
            }
        }
    }
    Ok((space.decode(&best_genes), best_score))
}

pub fn schedule_ga(
    dag: &WorkflowDag,
    env: &Environment,
    plan: &OffloadingPlan,
    objectives: &Objectives,
    params: &GaParams,
) -> Result<Assignment> {
    objectives.validate()?;
    let problem = Problem::new(dag, env)?;
    let space = SearchSpace::new(&problem, plan)?;
    let (nodes, _) = search(&problem, &space, objectives, params)?;
    Ok(problem.assignment(&nodes))
}
