use crate::environment::Tier;
use crate::error::Result;
use crate::sim::{Problem, Timeline};

use super::SearchSpace;

/// Topological order; each task goes to the allowed node where it could
/// start earliest (lowest node id on ties).
pub(crate) fn fcfs(problem: &Problem, space: &SearchSpace) -> Result<Vec<usize>> {
    let mut timeline = Timeline::new(problem);
    let mut nodes = Vec::with_capacity(problem.task_count());
    for k in 0..problem.task_count() {
        let mut best: Option<(f64, usize)> = None;
        for &node in &space.allowed[k] {
            let start = timeline.earliest_start(k, node)?;
            if best.is_none_or(|(s, _)| start < s) {
                best = Some((start, node));
            }
        }
        let (_, node) = best.expect("allowed lists are non-empty");
        let ready = timeline.data_ready(k, node)?.at;
        timeline.commit(k, node, ready);
        nodes.push(node);
    }
    Ok(nodes)
}

/// Topological order; the k-th task of a tier goes to allowed node
/// `k mod |tier|`, with one counter per tier.
pub(crate) fn round_robin(problem: &Problem, space: &SearchSpace) -> Vec<usize> {
    let mut counters = [0usize; 3];
    (0..problem.task_count())
        .map(|k| {
            let allowed = &space.allowed[k];
            let slot = match problem.env.nodes[allowed[0]].tier {
                Tier::Device => 0,
                Tier::Edge => 1,
                Tier::Cloud => 2,
            };
            let node = allowed[counters[slot] % allowed.len()];
            counters[slot] += 1;
            node
        })
        .collect()
}

pub(crate) fn min_min(problem: &Problem, space: &SearchSpace) -> Result<Vec<usize>> {
    ready_set_heuristic(problem, space, false)
}

pub(crate) fn max_min(problem: &Problem, space: &SearchSpace) -> Result<Vec<usize>> {
    ready_set_heuristic(problem, space, true)
}

/// Repeatedly takes each ready task's best completion time over its allowed
/// nodes, commits the task whose best is smallest (MinMin) or largest
/// (MaxMin), ties to the lower task id, then the lower node id.
fn ready_set_heuristic(problem: &Problem, space: &SearchSpace, take_max: bool) -> Result<Vec<usize>> {
    let n = problem.task_count();
    let mut timeline = Timeline::new(problem);
    let mut waiting: Vec<usize> = problem.parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (k, parents) in problem.parents.iter().enumerate() {
        for &(p, _) in parents {
            children[p].push(k);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&k| waiting[k] == 0).collect();
    let mut nodes = vec![usize::MAX; n];

    while !ready.is_empty() {
        // (completion, task id, position in ready, node, data-ready time)
        let mut pick: Option<(f64, &str, usize, usize, f64)> = None;
        for (slot, &k) in ready.iter().enumerate() {
            let mut best: Option<(f64, usize, f64)> = None;
            for &node in &space.allowed[k] {
                let at = timeline.data_ready(k, node)?.at;
                let ect = timeline.node_free[node].max(at) + problem.exec_time(k, node);
                if best.is_none_or(|(b, _, _)| ect < b) {
                    best = Some((ect, node, at));
                }
            }
            let (ect, node, at) = best.expect("allowed lists are non-empty");
            let id = problem.task_id(k);
            let better = match pick {
                None => true,
                Some((e, pid, ..)) => {
                    let outranks = if take_max { ect > e } else { ect < e };
                    outranks || (ect == e && id < pid)
                }
            };
            if better {
                pick = Some((ect, id, slot, node, at));
            }
        }
        let (_, _, slot, node, at) = pick.expect("ready set is non-empty");
        let k = ready.swap_remove(slot);
        timeline.commit(k, node, at);
        nodes[k] = node;
        for &c in &children[k] {
            waiting[c] -= 1;
            if waiting[c] == 0 {
                ready.push(c);
            }
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::environment::{table1_environment, Environment, NodeSpec};
    use crate::offloading::OffloadingPlan;
    use crate::workflow::{DataEdge, TaskSpec, WorkflowDag};

    fn two_speed_env() -> Environment {
        let mut env = table1_environment(&BTreeMap::new(), &BTreeMap::new()).unwrap();
        let edge = |id: &str, mips| NodeSpec {
            id: id.into(),
            tier: Tier::Edge,
            mips,
            p_run: 0.0,
            p_idle: 0.0,
            p_tx: 0.0,
            p_rx: 0.0,
            cost_rate: 0.0,
        };
        env.nodes.retain(|n| n.tier != Tier::Edge);
        env.nodes.push(edge("n1", 1000.0));
        env.nodes.push(edge("n2", 2000.0));
        env
    }

    fn edge_plan(dag: &WorkflowDag) -> OffloadingPlan {
        OffloadingPlan { tier_of: dag.tasks.iter().map(|t| (t.id.clone(), Tier::Edge)).collect() }
    }

    fn run(
        dag: &WorkflowDag,
        env: &Environment,
        f: impl Fn(&Problem, &SearchSpace) -> Vec<usize>,
    ) -> (Vec<String>, f64) {
        let problem = Problem::new(dag, env).unwrap();
        let space = SearchSpace::new(&problem, &edge_plan(dag)).unwrap();
        let nodes = f(&problem, &space);
        let names = nodes.iter().map(|&n| env.nodes[n].id.clone()).collect();
        (names, problem.evaluate(&nodes).unwrap().makespan)
    }

    fn independent(lengths: &[(&str, f64)]) -> WorkflowDag {
        let mut dag = WorkflowDag::new("ind");
        dag.tasks = lengths.iter().map(|(id, l)| TaskSpec::new(*id, *l)).collect();
        dag
    }

    #[test]
    fn minmin_and_maxmin_two_task_instance() {
        let env = two_speed_env();
        let dag = independent(&[("t1", 1000.0), ("t2", 2000.0)]);
        assert_eq!(run(&dag, &env, |p, s| min_min(p, s).unwrap()), (vec!["n2".into(), "n2".into()], 1.5));
        assert_eq!(run(&dag, &env, |p, s| max_min(p, s).unwrap()), (vec!["n1".into(), "n2".into()], 1.0));
    }

    #[test]
    fn fcfs_splits_symmetric_tasks() {
        let mut env = table1_environment(&BTreeMap::new(), &BTreeMap::new()).unwrap();
        for n in env.nodes.iter_mut().filter(|n| n.tier == Tier::Edge) {
            n.mips = 1000.0;
        }
        let dag = independent(&[("a", 1000.0), ("b", 1000.0)]);
        let problem = Problem::new(&dag, &env).unwrap();
        let space = SearchSpace::new(&problem, &edge_plan(&dag)).unwrap();
        let nodes = fcfs(&problem, &space).unwrap();
        assert_ne!(nodes[0], nodes[1]);
        assert_eq!(problem.evaluate(&nodes).unwrap().makespan, 1.0);
    }

    #[test]
    fn fcfs_chain_ties_go_to_lowest_id() {
        let env = table1_environment(&BTreeMap::new(), &BTreeMap::new()).unwrap();
        let mut dag = independent(&[("a", 1000.0), ("b", 1000.0)]);
        dag.edges.push(DataEdge::new("a", "b", 0));
        let (names, _) = run(&dag, &env, |p, s| fcfs(p, s).unwrap());
        assert_eq!(names, vec!["edge-1", "edge-1"]);
    }

    #[test]
    fn round_robin_cycles_per_tier() {
        let env = table1_environment(&BTreeMap::new(), &BTreeMap::new()).unwrap();
        let dag = independent(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)]);
        let (names, _) = run(&dag, &env, round_robin);
        assert_eq!(names, vec!["edge-1", "edge-2", "edge-1", "edge-2"]);

        let problem = Problem::new(&dag, &env).unwrap();
        let plan = OffloadingPlan {
            tier_of: [("a", Tier::Edge), ("b", Tier::Cloud), ("c", Tier::Edge), ("d", Tier::Cloud)]
                .into_iter()
                .map(|(t, tier)| (t.to_string(), tier))
                .collect(),
        };
        let space = SearchSpace::new(&problem, &plan).unwrap();
        let names: Vec<_> = round_robin(&problem, &space).iter().map(|&n| env.nodes[n].id.clone()).collect();
        assert_eq!(names, vec!["edge-1", "cloud-1", "edge-2", "cloud-2"]);
    }

    #[test]
    fn single_task_picks_fastest() {
        let env = two_speed_env();
        let dag = independent(&[("t", 1000.0)]);
        for f in [min_min, max_min] {
            assert_eq!(run(&dag, &env, |p, s| f(p, s).unwrap()).0, vec!["n2"]);
        }
    }

    #[test]
    fn equal_tasks_equal_nodes_tie_to_lowest_ids() {
        let mut env = two_speed_env();
        for n in env.nodes.iter_mut() {
            n.mips = 1000.0;
        }
        let dag = independent(&[("b", 1000.0), ("a", 1000.0)]);
        let problem = Problem::new(&dag, &env).unwrap();
        let space = SearchSpace::new(&problem, &edge_plan(&dag)).unwrap();
        let a = min_min(&problem, &space).unwrap();
        let b = max_min(&problem, &space).unwrap();
        // "a" commits first onto n1, "b" then takes n2.
        assert_eq!(problem.assignment(&a).node_of["a"], "n1");
        assert_eq!(problem.assignment(&a).node_of["b"], "n2");
        assert_eq!(a, b);
    }
}
