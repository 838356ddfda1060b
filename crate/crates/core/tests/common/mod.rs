//! Independent oracles shared by the integration tests. Nothing here calls
//! into the simulator; the oracles re-derive every quantity from the model
//! definitions.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use edgeflow_core::environment::{table1_environment, SizeClass};
use edgeflow_core::sim::Schedule;
use edgeflow_core::{
    Assignment, DataEdge, Environment, Metrics, NodeSpec, OffloadingPlan, TaskSpec, Tier, WorkflowDag,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub dag: WorkflowDag,
    pub env: Environment,
    pub plan: OffloadingPlan,
}

/// A seeded random instance: up to `max_tasks` tasks with random forward
/// edges, 1..=`max_per_tier` nodes per tier with random size classes, and
/// a random tier per task.
pub fn random_instance(seed: u64, max_tasks: usize, max_per_tier: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_tasks);
    let mut dag = WorkflowDag::new(format!("random-{seed}"));
    for i in 0..n {
        dag.tasks.push(TaskSpec::new(format!("t{i}"), rng.gen_range(1..=30) as f64 * 100.0));
    }
    for c in 1..n {
        for p in 0..c {
            if rng.gen_bool(0.35) {
                let bytes = if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=4_000_000) };
                dag.edges.push(DataEdge::new(format!("t{p}"), format!("t{c}"), bytes));
            }
        }
    }
    let classes = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];
    let mut sizes = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for tier in Tier::ALL {
        sizes.insert(tier, classes[rng.gen_range(0..3)]);
        counts.insert(tier, rng.gen_range(1..=max_per_tier));
    }
    let env = table1_environment(&sizes, &counts).unwrap();
    let plan =
        OffloadingPlan { tier_of: dag.tasks.iter().map(|t| (t.id.clone(), Tier::ALL[rng.gen_range(0..3)])).collect() };
    Instance { dag, env, plan }
}

/// Deterministic topological order by repeatedly taking the smallest ready id.
pub fn oracle_topo(dag: &WorkflowDag) -> Vec<String> {
    let mut done: BTreeSet<String> = BTreeSet::new();
    let mut order = Vec::new();
    while order.len() < dag.tasks.len() {
        let next = dag
            .tasks
            .iter()
            .map(|t| t.id.clone())
            .filter(|id| !done.contains(id))
            .filter(|id| dag.edges.iter().filter(|e| &e.child == id).all(|e| done.contains(&e.parent)))
            .min()
            .expect("acyclic");
        done.insert(next.clone());
        order.push(next);
    }
    order
}

pub fn node<'a>(env: &'a Environment, id: &str) -> &'a NodeSpec {
    env.nodes.iter().find(|n| n.id == id).unwrap()
}

pub fn oracle_transfer(env: &Environment, bytes: u64, from: &str, to: &str) -> f64 {
    if from == to {
        return 0.0;
    }
    let (a, b) = (node(env, from).tier, node(env, to).tier);
    let link = env.network.links.iter().find(|l| (l.a, l.b) == (a, b) || (l.a, l.b) == (b, a)).unwrap();
    link.latency_s + 8.0 * bytes as f64 / link.bandwidth_bps
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub start: BTreeMap<String, f64>,
    pub finish: BTreeMap<String, f64>,
    pub metrics: Metrics,
    pub devices: BTreeMap<String, DeviceParts>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DeviceParts {
    pub busy: f64,
    pub tx: f64,
    pub rx: f64,
}

/// Total length of the union of intervals.
pub fn union_length(intervals: &[(f64, f64)]) -> f64 {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(s, f)| f > s).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, f) in v {
        match cur {
            Some((cs, cf)) if s <= cf => cur = Some((cs, cf.max(f))),
            Some((cs, cf)) => {
                total += cf - cs;
                cur = Some((s, f));
            }
            None => cur = Some((s, f)),
        }
    }
    if let Some((cs, cf)) = cur {
        total += cf - cs;
    }
    total
}

/// Run > transmit > receive priority via set differences of unions.
pub fn partition(busy: &[(f64, f64)], tx: &[(f64, f64)], rx: &[(f64, f64)]) -> DeviceParts {
    let b = union_length(busy);
    let bt: Vec<_> = busy.iter().chain(tx).copied().collect();
    let btr: Vec<_> = bt.iter().chain(rx).copied().collect();
    let ubt = union_length(&bt);
    DeviceParts { busy: b, tx: ubt - b, rx: union_length(&btr) - ubt }
}

/// Straightforward re-simulation of the list-scheduling model.
pub fn oracle_simulate(dag: &WorkflowDag, env: &Environment, assignment: &Assignment) -> OracleRun {
    let origin = env.origin_device.clone();
    let mut free: BTreeMap<String, f64> = BTreeMap::new();
    let mut start = BTreeMap::new();
    let mut finish: BTreeMap<String, f64> = BTreeMap::new();
    let mut busy_secs: BTreeMap<String, f64> = BTreeMap::new();
    let mut busy_iv: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut tx_iv: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut rx_iv: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut makespan = 0.0f64;
    let is_device = |id: &str| node(env, id).tier == Tier::Device;
    let mut transfer = |from: &str, to: &str, s: f64, f: f64| {
        if is_device(from) {
            tx_iv.entry(from.to_string()).or_default().push((s, f));
        }
        if is_device(to) {
            rx_iv.entry(to.to_string()).or_default().push((s, f));
        }
    };

    for id in oracle_topo(dag) {
        let task = dag.task(&id).unwrap();
        let host = assignment.node_of[&id].clone();
        let ins: Vec<&DataEdge> = dag.edges.iter().filter(|e| e.child == id).collect();
        let outs: Vec<&DataEdge> = dag.edges.iter().filter(|e| e.parent == id).collect();
        let in_sum: u64 = ins.iter().map(|e| e.bytes).sum();
        let out_sum: u64 = outs.iter().map(|e| e.bytes).sum();

        let mut ready = 0.0f64;
        if ins.is_empty() && host != origin {
            let t = oracle_transfer(env, out_sum, &origin, &host);
            transfer(&origin, &host, 0.0, t);
            ready = ready.max(t);
        }
        for e in &ins {
            let from = &assignment.node_of[&e.parent];
            let pf = finish[&e.parent];
            let t = oracle_transfer(env, e.bytes, from, &host);
            if *from != host {
                transfer(from, &host, pf, pf + t);
            }
            ready = ready.max(pf + t);
        }
        let s = ready.max(*free.get(&host).unwrap_or(&0.0));
        let run = task.length / node(env, &host).mips;
        let f = s + run;
        free.insert(host.clone(), f);
        *busy_secs.entry(host.clone()).or_default() += run;
        busy_iv.entry(host.clone()).or_default().push((s, f));
        start.insert(id.clone(), s);
        finish.insert(id.clone(), f);
        makespan = makespan.max(f);
        if outs.is_empty() && host != origin {
            let t = oracle_transfer(env, in_sum, &host, &origin);
            transfer(&host, &origin, f, f + t);
            makespan = makespan.max(f + t);
        }
    }

    let mut energy = 0.0;
    let mut cost = 0.0;
    let mut devices = BTreeMap::new();
    for n in &env.nodes {
        let empty = Vec::new();
        if n.tier == Tier::Device {
            let parts = partition(
                busy_iv.get(&n.id).unwrap_or(&empty),
                tx_iv.get(&n.id).unwrap_or(&empty),
                rx_iv.get(&n.id).unwrap_or(&empty),
            );
            let idle = makespan - parts.busy - parts.tx - parts.rx;
            energy += (n.p_run * parts.busy + n.p_tx * parts.tx + n.p_rx * parts.rx + n.p_idle * idle) / 1000.0;
            devices.insert(n.id.clone(), parts);
        } else {
            cost += n.cost_rate * busy_secs.get(&n.id).copied().unwrap_or(0.0) / 3600.0;
        }
    }
    OracleRun { start, finish, metrics: Metrics { makespan, energy, cost }, devices }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

/// Checks every structural invariant of a simulated schedule and its
/// metrics against the oracle. Returns the first violation found.
pub fn check_schedule(
    dag: &WorkflowDag,
    env: &Environment,
    plan: Option<&OffloadingPlan>,
    schedule: &Schedule,
    metrics: &Metrics,
) -> Result<(), String> {
    let a = &schedule.assignment;
    if a.node_of.len() != dag.tasks.len() || schedule.entries.len() != dag.tasks.len() {
        return Err("schedule does not cover every task exactly once".into());
    }
    for t in &dag.tasks {
        let host = a.node_of.get(&t.id).ok_or(format!("{} unassigned", t.id))?;
        let spec = env.nodes.iter().find(|n| &n.id == host).ok_or(format!("{} on unknown node", t.id))?;
        if let Some(plan) = plan {
            if spec.tier != plan.tier_of[&t.id] {
                return Err(format!("{} placed on tier {:?}", t.id, spec.tier));
            }
        }
        let e = schedule.entry(&t.id).ok_or(format!("{} missing entry", t.id))?;
        if &e.node != host {
            return Err(format!("{} entry node disagrees with assignment", t.id));
        }
        if !(e.start >= 0.0 && e.finish > e.start) {
            return Err(format!("{} has interval [{}, {})", t.id, e.start, e.finish));
        }
    }
    let mut per_node: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for e in &schedule.entries {
        per_node.entry(&e.node).or_default().push((e.start, e.finish));
    }
    for (n, mut iv) in per_node {
        iv.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in iv.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(format!("overlap on {n}: {:?}", w));
            }
        }
    }
    for e in &dag.edges {
        let (p, c) = (schedule.entry(&e.parent).unwrap(), schedule.entry(&e.child).unwrap());
        let arrive = p.finish + oracle_transfer(env, e.bytes, &p.node, &c.node);
        if arrive > c.start * (1.0 + 1e-12) + 1e-12 {
            return Err(format!("{} starts at {} before data from {} arrives at {arrive}", e.child, c.start, e.parent));
        }
    }

    let oracle = oracle_simulate(dag, env, a);
    for e in &schedule.entries {
        if !close(e.start, oracle.start[&e.task], 1e-9) || !close(e.finish, oracle.finish[&e.task], 1e-9) {
            return Err(format!("{} timing differs from oracle", e.task));
        }
    }
    let m = &oracle.metrics;
    if !close(metrics.makespan, m.makespan, 1e-9) {
        return Err(format!("makespan {} vs oracle {}", metrics.makespan, m.makespan));
    }
    if !close(metrics.energy, m.energy, 1e-9) {
        return Err(format!("energy {} vs oracle {}", metrics.energy, m.energy));
    }
    if !close(metrics.cost, m.cost, 1e-9) {
        return Err(format!("cost {} vs oracle {}", metrics.cost, m.cost));
    }
    if metrics.makespan < 0.0 || metrics.energy < 0.0 || metrics.cost < 0.0 {
        return Err("negative metric".into());
    }
    Ok(())
}

/// Every tier-respecting assignment, nodes per task in ascending id order.
pub fn all_assignments(dag: &WorkflowDag, env: &Environment, plan: &OffloadingPlan) -> Vec<Assignment> {
    let mut out = vec![Assignment::default()];
    for t in &dag.tasks {
        let mut choices: Vec<&str> =
            env.nodes.iter().filter(|n| n.tier == plan.tier_of[&t.id]).map(|n| n.id.as_str()).collect();
        choices.sort();
        out = out
            .into_iter()
            .flat_map(|a| {
                choices.iter().map(move |c| {
                    let mut a = a.clone();
                    a.node_of.insert(t.id.clone(), c.to_string());
                    a
                })
            })
            .collect();
    }
    out
}

pub fn naive_search(text: &[u8], pattern: &[u8]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > text.len() {
        return Vec::new();
    }
    (0..=text.len() - pattern.len()).filter(|&i| &text[i..i + pattern.len()] == pattern).collect()
}

/// Full-matrix edit distance.
pub fn dp_levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
