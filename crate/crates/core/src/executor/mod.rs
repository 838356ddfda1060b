//! Real execution of a simulated plan on a pool of worker slots, one per
//! environment node.
//!
//! Each slot runs its node's tasks in the planned order, one at a time, and
//! starts a task only after all its parents completed. A single coordinator
//! thread emits every event, so timestamps are non-decreasing in emission
//! order. When a task fails, its descendants never start and stay in
//! `standby`.

pub mod builtin;
pub mod calibration;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, NodeId};
use crate::error::{Error, Result};
use crate::sim::Schedule;
use crate::workflow::{TaskId, TaskSpec, WorkflowDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Standby,
    Running,
    Completed,
    Failed,
}

impl TaskStatus {
    pub fn name(self) -> &'static str {
        match self {
            TaskStatus::Standby => "standby",
            TaskStatus::Running => "running",
            TaskStatus::Completed => "completed",
            TaskStatus::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TaskStatus::Completed | TaskStatus::Failed)
    }

    /// Allowed lifecycle edges: standby -> running -> completed | failed.
    pub fn can_follow(self, previous: TaskStatus) -> bool {
        matches!(
            (previous, self),
            (TaskStatus::Standby, TaskStatus::Running)
                | (TaskStatus::Running, TaskStatus::Completed)
                | (TaskStatus::Running, TaskStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub run_id: String,
    pub task: TaskId,
    pub status: TaskStatus,
    /// Seconds since the run started.
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Succeeded,
    Failed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub plan_id: String,
    pub events: Vec<RunEvent>,
    /// Wall-clock seconds of every task that ran to a terminal state.
    pub real_durations: BTreeMap<TaskId, f64>,
    pub outcome: RunOutcome,
}

impl RunRecord {
    /// Last status of every task that appears in the event log.
    pub fn final_status(&self) -> BTreeMap<TaskId, TaskStatus> {
        let mut out = BTreeMap::new();
        for e in &self.events {
            out.insert(e.task.clone(), e.status);
        }
        out
    }
}

/// Receives events in emission order.
pub trait EventSink: Sync {
    fn emit(&self, event: &RunEvent);
}

impl EventSink for () {
    fn emit(&self, _: &RunEvent) {}
}

/// Collects events in memory.
#[derive(Debug, Default)]
pub struct EventLog(pub Mutex<Vec<RunEvent>>);

impl EventSink for EventLog {
    fn emit(&self, event: &RunEvent) {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).push(event.clone());
    }
}

/// Runs one task to completion; an `Err` marks the task failed.
pub trait TaskRunner: Send + Sync {
    fn run(&self, task: &TaskSpec) -> Result<String>;
}

/// Runs the task's built-in binding and returns its summary. A failing
/// self-check counts as a failure.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinRunner;

impl TaskRunner for BuiltinRunner {
    fn run(&self, task: &TaskSpec) -> Result<String> {
        let binding = task.binding.as_ref().ok_or_else(|| Error::UnboundTask(task.id.clone()))?;
        let out = builtin::run_builtin(binding)?;
        if out.check {
            Ok(out.summary)
        } else {
            Err(Error::TaskPanic(format!("self-check failed: {}", out.summary)))
        }
    }
}

pub struct RunContext<'a> {
    pub run_id: &'a str,
    pub plan_id: &'a str,
}

struct Job {
    k: usize,
}

struct Done {
    k: usize,
    result: std::result::Result<String, String>,
    seconds: f64,
}

/// Every task must carry an executable binding.
pub fn check_bindings(dag: &WorkflowDag) -> Result<()> {
    for t in &dag.tasks {
        if !t.binding.as_ref().is_some_and(|b| b.is_executable()) {
            return Err(Error::UnboundTask(t.id.clone()));
        }
    }
    Ok(())
}

/// Executes the schedule's per-node queues for real and returns the run
/// record. The record is also streamed through `sink` as it is produced.
pub fn execute_plan(
    dag: &WorkflowDag,
    env: &Environment,
    schedule: &Schedule,
    runner: &dyn TaskRunner,
    sink: &dyn EventSink,
    ctx: RunContext<'_>,
) -> Result<RunRecord> {
    let order = dag.validate()?;
    check_bindings(dag)?;
    if env.nodes.is_empty() {
        return Err(Error::WorkerPoolUnavailable("environment has no nodes".into()));
    }
    let index: HashMap<&str, usize> = dag.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let n = dag.tasks.len();

    let queues = schedule.node_queues();
    let mut planned = vec![false; n];
    let mut node_queue: BTreeMap<&str, VecDeque<usize>> =
        env.nodes.iter().map(|nd| (nd.id.as_str(), VecDeque::new())).collect();
    for (node, tasks) in &queues {
        let queue = node_queue
            .get_mut(node.as_str())
            .ok_or_else(|| Error::InconsistentAssignment(format!("schedule uses unknown node {node}")))?;
        for t in tasks {
            let &k = index
                .get(t.as_str())
                .ok_or_else(|| Error::InconsistentAssignment(format!("schedule lists unknown task {t}")))?;
            if std::mem::replace(&mut planned[k], true) {
                return Err(Error::InconsistentAssignment(format!("task {t} scheduled twice")));
            }
            queue.push_back(k);
        }
    }
    if let Some(k) = planned.iter().position(|p| !p) {
        return Err(Error::InconsistentAssignment(format!("task {} is not scheduled", dag.tasks[k].id)));
    }

    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &dag.edges {
        let (p, c) = (index[e.parent.as_str()], index[e.child.as_str()]);
        parents[c].push(p);
        children[p].push(c);
    }

    let clock = Instant::now();
    let mut record = RunRecord {
        run_id: ctx.run_id.to_string(),
        plan_id: ctx.plan_id.to_string(),
        events: Vec::with_capacity(3 * n),
        real_durations: BTreeMap::new(),
        outcome: RunOutcome::Succeeded,
    };
    let emit = |record: &mut RunRecord, k: usize, status: TaskStatus, node: Option<&str>, detail: Option<String>| {
        let event = RunEvent {
            run_id: record.run_id.clone(),
            task: dag.tasks[k].id.clone(),
            status,
            timestamp: clock.elapsed().as_secs_f64(),
            node: node.map(str::to_string),
            detail,
        };
        sink.emit(&event);
        record.events.push(event);
    };

    for id in &order {
        emit(&mut record, index[id.as_str()], TaskStatus::Standby, None, None);
    }

    let node_ids: Vec<&str> = node_queue.keys().copied().collect();
    let mut queues: Vec<VecDeque<usize>> = node_queue.into_values().collect();

    std::thread::scope(|scope| {
        let (done_tx, done_rx) = mpsc::channel::<Done>();
        let mut job_tx: Vec<mpsc::Sender<Job>> = Vec::with_capacity(node_ids.len());
        for _ in &node_ids {
            let (tx, rx) = mpsc::channel::<Job>();
            let done_tx = done_tx.clone();
            job_tx.push(tx);
            scope.spawn(move || {
                for job in rx {
                    let task = &dag.tasks[job.k];
                    let started = Instant::now();
                    let result = match catch_unwind(AssertUnwindSafe(|| runner.run(task))) {
                        Ok(Ok(summary)) => Ok(summary),
                        Ok(Err(e)) => Err(e.to_string()),
                        Err(_) => Err(Error::TaskPanic(format!("task {} panicked", task.id)).to_string()),
                    };
                    let seconds = started.elapsed().as_secs_f64();
                    if done_tx.send(Done { k: job.k, result, seconds }).is_err() {
                        break;
                    }
                }
            });
        }
        drop(done_tx);

        let mut status = vec![TaskStatus::Standby; n];
        let mut stranded = vec![false; n];
        let mut busy = vec![false; node_ids.len()];
        let mut slot_of = vec![usize::MAX; n];
        let mut running = 0usize;
        let mut any_failed = false;

        loop {
            for (s, queue) in queues.iter_mut().enumerate() {
                if busy[s] {
                    continue;
                }
                while queue.front().is_some_and(|&k| stranded[k]) {
                    queue.pop_front();
                }
                let Some(&k) = queue.front() else { continue };
                if !parents[k].iter().all(|&p| status[p] == TaskStatus::Completed) {
                    continue;
                }
                queue.pop_front();
                if job_tx[s].send(Job { k }).is_err() {
                    record.outcome = RunOutcome::Aborted;
                    return;
                }
                busy[s] = true;
                slot_of[k] = s;
                status[k] = TaskStatus::Running;
                running += 1;
                emit(&mut record, k, TaskStatus::Running, Some(node_ids[s]), None);
            }
            if running == 0 {
                break;
            }
            let Ok(done) = done_rx.recv() else {
                record.outcome = RunOutcome::Aborted;
                return;
            };
            running -= 1;
            busy[slot_of[done.k]] = false;
            record.real_durations.insert(dag.tasks[done.k].id.clone(), done.seconds);
            let node = Some(node_ids[slot_of[done.k]]);
            match done.result {
                Ok(summary) => {
                    status[done.k] = TaskStatus::Completed;
                    emit(&mut record, done.k, TaskStatus::Completed, node, Some(summary));
                }
                Err(msg) => {
                    status[done.k] = TaskStatus::Failed;
                    any_failed = true;
                    emit(&mut record, done.k, TaskStatus::Failed, node, Some(msg));
                    let mut stack = children[done.k].clone();
                    while let Some(c) = stack.pop() {
                        if !std::mem::replace(&mut stranded[c], true) {
                            stack.extend_from_slice(&children[c]);
                        }
                    }
                }
            }
        }

        record.outcome = if any_failed {
            RunOutcome::Failed
        } else if status.iter().all(|s| *s == TaskStatus::Completed) {
            RunOutcome::Succeeded
        } else {
            // Queue order contradicts precedence; nothing can progress.
            RunOutcome::Aborted
        };
        drop(job_tx);
    });
    Ok(record)
}
