//! Deterministic list-scheduling simulation of an assignment.
//!
//! Tasks are committed in the workflow's deterministic topological order.
//! Each node runs one task at a time; a task starts once its node is free and
//! every parent's data has arrived. Entry tasks placed away from the origin
//! device first wait for their input upload, and exit tasks placed away from
//! it ship their result back, which counts towards the makespan. Transfers
//! never contend with each other.
//!
//! Device energy splits each device's makespan into running, transmitting,
//! receiving and idle time. Where activities overlap the higher-priority one
//! is charged (run > transmit > receive).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, NodeId, Tier};
use crate::error::{Error, Result};
use crate::scheduling::{Assignment, Objectives};
use crate::workflow::{TaskId, WorkflowDag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanttEntry {
    pub task: TaskId,
    pub node: NodeId,
    pub start: f64,
    pub finish: f64,
    /// Longest incoming transfer (parent data or input upload).
    pub transfer_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    /// Input upload from the origin device to an entry task.
    Upload,
    /// Parent output to child input.
    Dependency,
    /// Exit task result back to the origin device.
    Result,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEntry {
    pub kind: TransferKind,
    /// The task whose input (upload, dependency) or output (result) moves.
    pub task: TaskId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<TaskId>,
    pub from: NodeId,
    pub to: NodeId,
    pub bytes: u64,
    pub start: f64,
    pub finish: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignment: Assignment,
    /// One entry per task, in commit order.
    pub entries: Vec<GanttEntry>,
    pub transfers: Vec<TransferEntry>,
}

impl Schedule {
    pub fn entry(&self, task: &str) -> Option<&GanttEntry> {
        self.entries.iter().find(|e| e.task == task)
    }

    /// Tasks of each node in execution order.
    pub fn node_queues(&self) -> BTreeMap<NodeId, Vec<TaskId>> {
        let mut map: BTreeMap<NodeId, Vec<TaskId>> = BTreeMap::new();
        for e in &self.entries {
            map.entry(e.node.clone()).or_default().push(e.task.clone());
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub makespan: f64,
    /// End-device energy in joules.
    pub energy: f64,
    /// Dollars.
    pub cost: f64,
}

/// Time partition and energy of one end device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceUsage {
    pub node: NodeId,
    pub busy: f64,
    pub tx: f64,
    pub rx: f64,
    pub idle: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeadlineVerdict {
    Feasible,
    Infeasible,
    NoDeadline,
}

/// A workflow and environment compiled for repeated evaluation. Tasks are
/// addressed by their position in the topological order and nodes by their
/// index in `env.nodes`.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub dag: &'a WorkflowDag,
    pub env: &'a Environment,
    /// `order[k]` is the index in `dag.tasks` of the k-th task.
    pub order: Vec<usize>,
    pub parents: Vec<Vec<(usize, u64)>>,
    pub upload_bytes: Vec<Option<u64>>,
    pub result_bytes: Vec<Option<u64>>,
    pub origin: usize,
    links: [[Option<(f64, f64)>; 3]; 3],
}

fn tier_index(t: Tier) -> usize {
    match t {
        Tier::Device => 0,
        Tier::Edge => 1,
        Tier::Cloud => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Activity {
    Rx = 0,
    Tx = 1,
    Busy = 2,
}

struct Trace {
    entries: Vec<GanttEntry>,
    transfers: Vec<TransferEntry>,
}

impl<'a> Problem<'a> {
    pub fn new(dag: &'a WorkflowDag, env: &'a Environment) -> Result<Self> {
        env.validate()?;
        let order_ids = dag.validate()?;
        let index: BTreeMap<&str, usize> = dag.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
        let order: Vec<usize> = order_ids.iter().map(|id| index[id.as_str()]).collect();
        let mut pos = vec![0usize; dag.tasks.len()];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k;
        }
        let mut parents = vec![Vec::new(); order.len()];
        for e in &dag.edges {
            parents[pos[index[e.child.as_str()]]].push((pos[index[e.parent.as_str()]], e.bytes));
        }
        let upload_bytes = order
            .iter()
            .map(|&i| {
                let id = &dag.tasks[i].id;
                dag.is_entry(id).then(|| dag.input_payload(id))
            })
            .collect();
        let result_bytes = order
            .iter()
            .map(|&i| {
                let id = &dag.tasks[i].id;
                dag.is_exit(id).then(|| dag.output_payload(id))
            })
            .collect();
        let origin = env.nodes.iter().position(|n| n.id == env.origin_device).expect("validated");
        let mut links = [[None; 3]; 3];
        for l in &env.network.links {
            let (a, b) = (tier_index(l.a), tier_index(l.b));
            links[a][b] = Some((l.latency_s, l.bandwidth_bps));
            links[b][a] = Some((l.latency_s, l.bandwidth_bps));
        }
        Ok(Problem { dag, env, order, parents, upload_bytes, result_bytes, origin, links })
    }

    pub fn task_count(&self) -> usize {
        self.order.len()
    }

    pub fn task_id(&self, k: usize) -> &'a str {
        &self.dag.tasks[self.order[k]].id
    }

    pub fn exec_time(&self, k: usize, node: usize) -> f64 {
        self.dag.tasks[self.order[k]].length / self.env.nodes[node].mips
    }

    pub fn transfer_time(&self, bytes: u64, from: usize, to: usize) -> Result<f64> {
        if from == to {
            return Ok(0.0);
        }
        let (a, b) = (self.env.nodes[from].tier, self.env.nodes[to].tier);
        let (latency, bandwidth) = self.links[tier_index(a)][tier_index(b)].ok_or(Error::MissingLink(a, b))?;
        Ok(latency + 8.0 * bytes as f64 / bandwidth)
    }

    /// Node index per topological position.
    pub fn node_vector(&self, assignment: &Assignment) -> Result<Vec<usize>> {
        if assignment.node_of.len() != self.task_count() {
            return Err(Error::InconsistentAssignment(format!(
                "assignment covers {} tasks, workflow has {}",
                assignment.node_of.len(),
                self.task_count()
            )));
        }
        (0..self.task_count())
            .map(|k| {
                let id = self.task_id(k);
                let node = assignment
                    .node_of
                    .get(id)
                    .ok_or_else(|| Error::InconsistentAssignment(format!("task `{id}` is unassigned")))?;
                self.env
                    .nodes
                    .iter()
                    .position(|n| &n.id == node)
                    .ok_or_else(|| Error::InconsistentAssignment(format!("task `{id}` on unknown node `{node}`")))
            })
            .collect()
    }

    pub fn assignment(&self, nodes: &[usize]) -> Assignment {
        Assignment {
            node_of: (0..self.task_count())
                .map(|k| (self.task_id(k).to_string(), self.env.nodes[nodes[k]].id.clone()))
                .collect(),
        }
    }

    /// Metrics only; the hot path of the search-based schedulers.
    pub fn evaluate(&self, nodes: &[usize]) -> Result<Metrics> {
        self.run(nodes, None)
    }

    pub fn simulate(&self, nodes: &[usize]) -> Result<(Schedule, Metrics)> {
        let mut trace = Trace { entries: Vec::with_capacity(nodes.len()), transfers: Vec::new() };
        let metrics = self.run(nodes, Some(&mut trace))?;
        Ok((
            Schedule { assignment: self.assignment(nodes), entries: trace.entries, transfers: trace.transfers },
            metrics,
        ))
    }

    fn run(&self, nodes: &[usize], mut trace: Option<&mut Trace>) -> Result<Metrics> {
        let n_nodes = self.env.nodes.len();
        let mut timeline = Timeline::new(self);
        let mut activity: Vec<Vec<(f64, f64, Activity)>> = vec![Vec::new(); n_nodes];
        let is_device = |n: usize| self.env.nodes[n].tier == Tier::Device;
        let note_transfer = |activity: &mut Vec<Vec<(f64, f64, Activity)>>, from: usize, to: usize, s: f64, f: f64| {
            if is_device(from) {
                activity[from].push((s, f, Activity::Tx));
            }
            if is_device(to) {
                activity[to].push((s, f, Activity::Rx));
            }
        };

        let mut makespan = 0.0f64;
        for k in 0..self.task_count() {
            let node = nodes[k];
            let ready = timeline.data_ready(k, node)?;
            let (start, finish) = timeline.commit(k, node, ready.at);
            makespan = makespan.max(finish);
            if is_device(node) {
                activity[node].push((start, finish, Activity::Busy));
            }

            if let Some(bytes) = self.upload_bytes[k] {
                if node != self.origin {
                    let f = self.transfer_time(bytes, self.origin, node)?;
                    note_transfer(&mut activity, self.origin, node, 0.0, f);
                    if let Some(t) = trace.as_deref_mut() {
                        t.transfers.push(self.transfer_entry(
                            TransferKind::Upload,
                            k,
                            None,
                            self.origin,
                            node,
                            bytes,
                            0.0,
                            f,
                        ));
                    }
                }
            }
            for &(p, bytes) in &self.parents[k] {
                let from = nodes[p];
                if from != node {
                    let s = timeline.finish[p];
                    let f = s + self.transfer_time(bytes, from, node)?;
                    note_transfer(&mut activity, from, node, s, f);
                    if let Some(t) = trace.as_deref_mut() {
                        t.transfers.push(self.transfer_entry(
                            TransferKind::Dependency,
                            k,
                            Some(p),
                            from,
                            node,
                            bytes,
                            s,
                            f,
                        ));
                    }
                }
            }
            if let Some(bytes) = self.result_bytes[k] {
                if node != self.origin {
                    let f = finish + self.transfer_time(bytes, node, self.origin)?;
                    makespan = makespan.max(f);
                    note_transfer(&mut activity, node, self.origin, finish, f);
                    if let Some(t) = trace.as_deref_mut() {
                        t.transfers.push(self.transfer_entry(
                            TransferKind::Result,
                            k,
                            None,
                            node,
                            self.origin,
                            bytes,
                            finish,
                            f,
                        ));
                    }
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.entries.push(GanttEntry {
                    task: self.task_id(k).to_string(),
                    node: self.env.nodes[node].id.clone(),
                    start,
                    finish,
                    transfer_in: ready.transfer_in,
                });
            }
        }

        let mut energy = 0.0;
        let mut cost = 0.0;
        for (n, spec) in self.env.nodes.iter().enumerate() {
            if spec.tier == Tier::Device {
                energy += device_usage(spec, &mut activity[n], makespan).energy;
            } else {
                cost += crate::environment::busy_cost(spec, timeline.busy[n]);
            }
        }
        Ok(Metrics { makespan, energy, cost })
    }

    #[allow(clippy::too_many_arguments)]
    fn transfer_entry(
        &self,
        kind: TransferKind,
        k: usize,
        parent: Option<usize>,
        from: usize,
        to: usize,
        bytes: u64,
        start: f64,
        finish: f64,
    ) -> TransferEntry {
        TransferEntry {
            kind,
            task: self.task_id(k).to_string(),
            parent: parent.map(|p| self.task_id(p).to_string()),
            from: self.env.nodes[from].id.clone(),
            to: self.env.nodes[to].id.clone(),
            bytes,
            start,
            finish,
        }
    }
}

pub(crate) struct DataReady {
    pub at: f64,
    pub transfer_in: f64,
}

/// Node availability and committed finish times during list scheduling.
pub(crate) struct Timeline<'p, 'a> {
    problem: &'p Problem<'a>,
    pub node_free: Vec<f64>,
    pub busy: Vec<f64>,
    pub finish: Vec<f64>,
    pub node_of: Vec<usize>,
}

impl<'p, 'a> Timeline<'p, 'a> {
    pub fn new(problem: &'p Problem<'a>) -> Self {
        let n = problem.env.nodes.len();
        let t = problem.task_count();
        Timeline {
            problem,
            node_free: vec![0.0; n],
            busy: vec![0.0; n],
            finish: vec![f64::NAN; t],
            node_of: vec![usize::MAX; t],
        }
    }

    /// When all inputs of task `k` would be present on `node`. Parents must
    /// already be committed.
    pub fn data_ready(&self, k: usize, node: usize) -> Result<DataReady> {
        let p = self.problem;
        let mut at = 0.0f64;
        let mut transfer_in = 0.0f64;
        if let Some(bytes) = p.upload_bytes[k] {
            let t = p.transfer_time(bytes, p.origin, node)?;
            at = at.max(t);
            transfer_in = transfer_in.max(t);
        }
        for &(parent, bytes) in &p.parents[k] {
            let t = p.transfer_time(bytes, self.node_of[parent], node)?;
            at = at.max(self.finish[parent] + t);
            transfer_in = transfer_in.max(t);
        }
        Ok(DataReady { at, transfer_in })
    }

    pub fn earliest_start(&self, k: usize, node: usize) -> Result<f64> {
        Ok(self.node_free[node].max(self.data_ready(k, node)?.at))
    }

    pub fn commit(&mut self, k: usize, node: usize, ready: f64) -> (f64, f64) {
        let start = self.node_free[node].max(ready);
        let run = self.problem.exec_time(k, node);
        let finish = start + run;
        self.node_free[node] = finish;
        self.busy[node] += run;
        self.finish[k] = finish;
        self.node_of[k] = node;
        (start, finish)
    }
}

fn device_usage(
    spec: &crate::environment::NodeSpec,
    intervals: &mut [(f64, f64, Activity)],
    makespan: f64,
) -> DeviceUsage {
    // Sweep over interval boundaries, charging each elementary segment to the
    // highest-priority activity active on it.
    let mut points: Vec<(f64, bool, Activity)> = Vec::with_capacity(intervals.len() * 2);
    for &(s, f, a) in intervals.iter() {
        if f > s {
            points.push((s, true, a));
            points.push((f, false, a));
        }
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut active = [0u32; 3];
    let mut spent = [0.0f64; 3];
    let mut last = 0.0;
    for (t, opening, a) in points {
        if t > last {
            if let Some(top) = (0..3).rev().find(|&i| active[i] > 0) {
                spent[top] += t - last;
            }
            last = t;
        }
        if opening {
            active[a as usize] += 1;
        } else {
            active[a as usize] -= 1;
        }
    }
    let (busy, tx, rx) = (spent[Activity::Busy as usize], spent[Activity::Tx as usize], spent[Activity::Rx as usize]);
    // Snap to multiples of the makespan's ulp: every partial sum of the
    // four parts is then representable, so busy + tx + rx + idle equals the
    // makespan exactly.
    let q = makespan.next_up() - makespan;
    let snap = |x: f64| if makespan > 0.0 { (x / q).round() * q } else { 0.0 };
    let (busy, tx, rx) = (snap(busy), snap(tx), snap(rx));
    let idle = makespan - (busy + tx + rx);
    let energy = (spec.p_run * busy + spec.p_tx * tx + spec.p_rx * rx + spec.p_idle * idle) / 1000.0;
    DeviceUsage { node: spec.id.clone(), busy, tx, rx, idle, energy }
}

/// Recomputes the per-device breakdown from a schedule.
pub fn device_accounting(env: &Environment, schedule: &Schedule, makespan: f64) -> Vec<DeviceUsage> {
    env.nodes
        .iter()
        .filter(|n| n.tier == Tier::Device)
        .map(|spec| {
            let mut intervals: Vec<(f64, f64, Activity)> = schedule
                .entries
                .iter()
                .filter(|e| e.node == spec.id)
                .map(|e| (e.start, e.finish, Activity::Busy))
                .collect();
            for t in &schedule.transfers {
                if t.from == spec.id {
                    intervals.push((t.start, t.finish, Activity::Tx));
                }
                if t.to == spec.id {
                    intervals.push((t.start, t.finish, Activity::Rx));
                }
            }
            device_usage(spec, &mut intervals, makespan)
        })
        .collect()
}

/// Simulates an assignment. See the module docs for the timing and energy
/// model.
pub fn simulate(dag: &WorkflowDag, env: &Environment, assignment: &Assignment) -> Result<(Schedule, Metrics)> {
    let problem = Problem::new(dag, env)?;
    let nodes = problem.node_vector(assignment)?;
    problem.simulate(&nodes)
}

pub fn check_deadline(metrics: &Metrics, objectives: &Objectives) -> DeadlineVerdict {
    match objectives.deadline {
        None => DeadlineVerdict::NoDeadline,
        Some(d) if metrics.makespan > d => DeadlineVerdict::Infeasible,
        Some(_) => DeadlineVerdict::Feasible,
    }
}

pub fn assignment_breakdown(schedule: &Schedule) -> BTreeMap<NodeId, usize> {
    let mut map = BTreeMap::new();
    for e in &schedule.entries {
        *map.entry(e.node.clone()).or_insert(0) += 1;
    }
    map
}
