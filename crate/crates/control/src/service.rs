//! The controller: plans, simulations, real runs, reports and comparisons.
//!
//! Plans, simulations, run records and comparisons are persisted once and
//! never rewritten. Live runs keep their event log in memory until the
//! process exits; a finished run's record is persisted before the run is
//! marked terminal, so a terminal run can always be reloaded.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use edgeflow_core::executor::{
    check_bindings, execute_plan, BuiltinRunner, EventSink, RunContext, RunEvent, RunOutcome, RunRecord, TaskRunner,
    TaskStatus,
};
use edgeflow_core::sim::{check_deadline, device_accounting, DeadlineVerdict, DeviceUsage, GanttEntry};
use edgeflow_core::{
    offload, schedule, simulate, Environment, EnvironmentConfig, Metrics, NodeId, Objectives, OffloadingPlan,
    OffloadingStrategy, Schedule, SchedulerKind, SchedulerParams, TaskId, WorkflowDag,
};
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, Result};
use crate::plan::{materialize, ExecutionPlan, PlanRequest, WorkflowSource};
use crate::store::{comparison_path, plan_path, run_path, simulation_path, Put, Store};

/// Stored outcome of simulating a plan with one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub plan_id: String,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub offloading: OffloadingPlan,
    pub schedule: Schedule,
    pub metrics: Metrics,
    pub deadline_verdict: DeadlineVerdict,
    pub devices: Vec<DeviceUsage>,
}

/// Stored record of a finished real run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    #[serde(flatten)]
    pub record: RunRecord,
    /// Seed of the simulation whose schedule was executed.
    pub seed: u64,
    /// Unix seconds.
    pub started_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub algorithm: SchedulerKind,
    /// Makespan in seconds.
    pub time: f64,
    /// End-device energy in joules.
    pub energy: f64,
    /// Dollars.
    pub cost: f64,
    /// Number of seeds the medians are taken over; 1 for heuristics.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarDataset {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_id: Option<String>,
    pub strategy: OffloadingStrategy,
    pub objectives: Objectives,
    pub seeds: Vec<u64>,
    pub rows: Vec<BarRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRow {
    pub task: TaskId,
    /// Simulated execution seconds.
    pub simulated: f64,
    /// Measured execution seconds; absent without a run or if the task
    /// never finished.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub plan_id: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RunOutcome>,
    /// Rows of the latest comparison made for this plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bar: Option<Vec<BarRow>>,
    /// Node to number of tasks placed on it.
    pub pie: BTreeMap<NodeId, usize>,
    /// One row per task, in simulated commit order.
    pub line: Vec<LineRow>,
    pub gantt: Vec<GanttEntry>,
    pub deadline_verdict: DeadlineVerdict,
    pub metrics: Metrics,
    /// Final status of every task in the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_status: Option<BTreeMap<TaskId, TaskStatus>>,
}

/// Sweep request. With `plan_id` the workflow, environment, strategy,
/// objectives and params come from the plan and the corresponding fields
/// here must be absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareRequest {
    pub plan_id: Option<String>,
    pub workflow: Option<WorkflowSource>,
    pub environment: Option<EnvironmentConfig>,
    pub strategy: Option<OffloadingStrategy>,
    pub objectives: Option<Objectives>,
    pub params: Option<SchedulerParams>,
    /// Defaults to all six under a pure time objective, else PSO and GA.
    pub algorithms: Option<Vec<SchedulerKind>>,
    /// Seeds for the search-based schedulers; defaults to the plan seed, or 0.
    pub seeds: Option<Vec<u64>>,
}

#[derive(Default)]
struct LiveState {
    events: Vec<RunEvent>,
    terminal: bool,
}

/// In-memory event log of one run: single writer, many readers.
#[derive(Default)]
struct LiveRun {
    state: Mutex<LiveState>,
    changed: Condvar,
}

impl LiveRun {
    fn lock(&self) -> MutexGuard<'_, LiveState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn finish(&self) {
        self.lock().terminal = true;
        self.changed.notify_all();
    }
}

impl EventSink for LiveRun {
    fn emit(&self, event: &RunEvent) {
        self.lock().events.push(event.clone());
        self.changed.notify_all();
    }
}

/// Replay-then-follow iterator over a run's events. Ends after the run's
/// last event.
pub struct EventStream {
    source: Source,
    pos: usize,
}

enum Source {
    Live(Arc<LiveRun>),
    Stored(Vec<RunEvent>),
}

impl Iterator for EventStream {
    type Item = RunEvent;

    fn next(&mut self) -> Option<RunEvent> {
        let event = match &self.source {
            Source::Stored(events) => events.get(self.pos).cloned(),
            Source::Live(live) => {
                let mut state = live.lock();
                while self.pos >= state.events.len() && !state.terminal {
                    state = live.changed.wait(state).unwrap_or_else(|e| e.into_inner());
                }
                state.events.get(self.pos).cloned()
            }
        };
        self.pos += usize::from(event.is_some());
        event
    }
}

struct Inner {
    store: Store,
    runner: Arc<dyn TaskRunner>,
    /// Runs started by this process.
    live: Mutex<HashMap<String, Arc<LiveRun>>>,
    /// Plan id to its active run id. Guards run start per plan.
    active: Mutex<HashMap<String, String>>,
}

#[derive(Clone)]
pub struct Controller {
    inner: Arc<Inner>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

impl Controller {
    pub fn new(store: Store) -> Self {
        Self::with_runner(store, Arc::new(BuiltinRunner))
    }

    pub fn with_runner(store: Store, runner: Arc<dyn TaskRunner>) -> Self {
        Controller { inner: Arc::new(Inner { store, runner, live: Mutex::default(), active: Mutex::default() }) }
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn build_plan(&self, request: &PlanRequest) -> Result<ExecutionPlan> {
        let content = materialize(request)?;
        let id = self.store().next_id("plan")?;
        let plan = ExecutionPlan {
            name: request.name.clone().unwrap_or_else(|| content.workflow.name.clone()),
            id,
            workflow: content.workflow,
            environment: content.environment,
            strategy: request.strategy,
            scheduler: request.scheduler,
            params: request.params,
            objectives: request.objectives,
            seed: request.seed,
            created_at: now(),
        };
        self.store().put_new(&plan_path(&plan.id), &plan)?;
        Ok(plan)
    }

    pub fn get_plan(&self, plan_id: &str) -> Result<ExecutionPlan> {
        self.store().get(&plan_path(plan_id))?.ok_or_else(|| ControlError::PlanNotFound(plan_id.into()))
    }

    /// Offloads, schedules and simulates the plan. Idempotent per
    /// (plan, seed): a stored result is returned unchanged.
    pub fn simulate_plan(&self, plan_id: &str, seed: Option<u64>) -> Result<SimulationResult> {
        let plan = self.get_plan(plan_id)?;
        let seed = seed.unwrap_or(plan.seed);
        let path = simulation_path(plan_id, seed);
        if let Some(stored) = self.store().get(&path)? {
            return Ok(stored);
        }
        let result = simulate_with(&plan, seed)?;
        // Concurrent callers may both compute; the first write wins and the
        // result is deterministic either way.
        match self.store().put_new(&path, &result)? {
            Put::Written => Ok(result),
            Put::AlreadyExists => self.load_simulation(plan_id, seed),
        }
    }

    pub fn load_simulation(&self, plan_id: &str, seed: u64) -> Result<SimulationResult> {
        self.get_plan(plan_id)?;
        self.store()
            .get(&simulation_path(plan_id, seed))?
            .ok_or_else(|| ControlError::PlanNotSimulated(plan_id.into(), seed))
    }

    /// Starts a real run of the plan's simulated schedule and returns its
    /// id. At most one run per plan is active at a time.
    pub fn execute_plan_real(&self, plan_id: &str, seed: Option<u64>) -> Result<String> {
        let plan = self.get_plan(plan_id)?;
        let seed = seed.unwrap_or(plan.seed);
        let sim = self.load_simulation(plan_id, seed)?;
        check_bindings(&plan.workflow)?;

        let mut active = lock(&self.inner.active);
        if let Some(run) = active.get(plan_id) {
            return Err(ControlError::RunAlreadyActive { plan: plan_id.into(), run: run.clone() });
        }
        let run_id = self.store().next_id("run")?;
        let live = Arc::new(LiveRun::default());
        lock(&self.inner.live).insert(run_id.clone(), live.clone());
        active.insert(plan_id.into(), run_id.clone());
        drop(active);

        let this = self.clone();
        let id = run_id.clone();
        let started_at = now();
        let spawned = std::thread::Builder::new().name(format!("run-{id}")).spawn(move || {
            let ctx = RunContext { run_id: &id, plan_id: &plan.id };
            let record =
                execute_plan(&plan.workflow, &plan.environment, &sim.schedule, &*this.inner.runner, &*live, ctx)
                    .unwrap_or_else(|e| {
                        log::error!("run {id} aborted: {e}");
                        RunRecord {
                            run_id: id.clone(),
                            plan_id: plan.id.clone(),
                            events: live.lock().events.clone(),
                            real_durations: BTreeMap::new(),
                            outcome: RunOutcome::Aborted,
                        }
                    });
            let doc = RunDocument { record, seed, started_at };
            if let Err(e) = this.store().put_new(&run_path(&id), &doc) {
                log::error!("run {id} could not be persisted: {e}");
            }
            lock(&this.inner.active).remove(&plan.id);
            live.finish();
        });
        if let Err(e) = spawned {
            lock(&self.inner.active).remove(plan_id);
            lock(&self.inner.live).remove(&run_id);
            return Err(ControlError::Core(edgeflow_core::Error::WorkerPoolUnavailable(e.to_string())));
        }
        Ok(run_id)
    }

    /// Every event of the run in log order, including those emitted before
    /// the call; follows a live run until it ends.
    pub fn stream_events(&self, run_id: &str) -> Result<EventStream> {
        if let Some(live) = lock(&self.inner.live).get(run_id) {
            return Ok(EventStream { source: Source::Live(live.clone()), pos: 0 });
        }
        let doc = self.stored_run(run_id)?;
        Ok(EventStream { source: Source::Stored(doc.record.events), pos: 0 })
    }

    fn stored_run(&self, run_id: &str) -> Result<RunDocument> {
        self.store().get(&run_path(run_id))?.ok_or_else(|| ControlError::RunNotFound(run_id.into()))
    }

    /// The persisted record of a terminal run.
    pub fn get_run(&self, run_id: &str) -> Result<RunDocument> {
        if let Some(live) = lock(&self.inner.live).get(run_id) {
            if !live.lock().terminal {
                return Err(ControlError::RunNotTerminal(run_id.into()));
            }
        }
        self.stored_run(run_id)
    }

    /// Blocks until the run ends and returns its record.
    pub fn wait_run(&self, run_id: &str) -> Result<RunDocument> {
        self.stream_events(run_id)?.for_each(drop);
        self.stored_run(run_id)
    }

    /// Chart payloads for a simulation and, optionally, a finished run of
    /// it. `seed` is ignored when a run is given.
    pub fn build_report(&self, plan_id: &str, run_id: Option<&str>, seed: Option<u64>) -> Result<Report> {
        let plan = self.get_plan(plan_id)?;
        let run = match run_id {
            Some(r) => {
                let doc = self.get_run(r)?;
                if doc.record.plan_id != plan_id {
                    return Err(ControlError::InvalidRequest(format!(
                        "run {r} belongs to plan {}",
                        doc.record.plan_id
                    )));
                }
                Some(doc)
            }
            None => None,
        };
        let seed = run.as_ref().map_or(seed.unwrap_or(plan.seed), |d| d.seed);
        let sim = self.load_simulation(plan_id, seed)?;
        let bar = self.latest_comparison(plan_id)?.map(|c| c.rows);
        Ok(assemble_report(&sim, run.as_ref(), bar))
    }

    fn latest_comparison(&self, plan_id: &str) -> Result<Option<BarDataset>> {
        for id in self.store().list("comparisons")?.iter().rev() {
            let doc: Option<BarDataset> = self.store().get(&comparison_path(id))?;
            if let Some(doc) = doc.filter(|d| d.plan_id.as_deref() == Some(plan_id)) {
                return Ok(Some(doc));
            }
        }
        Ok(None)
    }

    /// Runs every requested algorithm and tabulates its metrics; PSO and GA
    /// report medians over the seeds. The dataset is persisted.
    pub fn compare_algorithms(&self, request: &CompareRequest) -> Result<BarDataset> {
        let (dag, env, strategy, objectives, params, default_seed) = match &request.plan_id {
            Some(id) => {
                if request.workflow.is_some()
                    || request.environment.is_some()
                    || request.strategy.is_some()
                    || request.objectives.is_some()
                    || request.params.is_some()
                {
                    return Err(ControlError::InvalidRequest(
                        "a plan comparison takes workflow, environment, strategy, objectives and params from the plan"
                            .into(),
                    ));
                }
                let p = self.get_plan(id)?;
                (p.workflow, p.environment, p.strategy, p.objectives, p.params, p.seed)
            }
            None => {
                let source = request
                    .workflow
                    .as_ref()
                    .ok_or_else(|| ControlError::InvalidRequest("either plan_id or workflow is required".into()))?;
                let env = request.environment.clone().unwrap_or_default().build()?;
                let objectives = request.objectives.unwrap_or_default();
                objectives.validate()?;
                let params = request.params.unwrap_or_default();
                params.pso.validate()?;
                params.ga.validate()?;
                (source.materialize()?, env, request.strategy.unwrap_or_default(), objectives, params, 0)
            }
        };
        let algorithms = match &request.algorithms {
            Some(list) if list.is_empty() => return Err(ControlError::InvalidRequest("empty algorithm list".into())),
            Some(list) => list.clone(),
            None if objectives.is_pure_time() => SchedulerKind::ALL.to_vec(),
            None => vec![SchedulerKind::Pso, SchedulerKind::Ga],
        };
        for &kind in &algorithms {
            edgeflow_core::scheduling::check_compatibility(kind, &objectives)?;
        }
        let seeds = request.seeds.clone().unwrap_or_else(|| vec![default_seed]);
        if seeds.is_empty() {
            return Err(ControlError::InvalidRequest("empty seed list".into()));
        }

        let plan = offload(&dag, &env, strategy)?;
        let mut rows = Vec::with_capacity(algorithms.len());
        for kind in algorithms {
            let kind_seeds: &[u64] = if kind.is_seeded() { &seeds } else { &seeds[..1] };
            let mut samples = Vec::with_capacity(kind_seeds.len());
            for &seed in kind_seeds {
                let a = schedule(kind, &dag, &env, &plan, &objectives, &params.with_seed(seed))?;
                samples.push(simulate(&dag, &env, &a)?.1);
            }
            let pick = |f: fn(&Metrics) -> f64| median(&mut samples.iter().map(f).collect::<Vec<_>>());
            rows.push(BarRow {
                algorithm: kind,
                time: pick(|m| m.makespan),
                energy: pick(|m| m.energy),
                cost: pick(|m| m.cost),
                samples: kind_seeds.len(),
            });
        }
        let dataset = BarDataset {
            id: self.store().next_id("cmp")?,
            plan_id: request.plan_id.clone(),
            strategy,
            objectives,
            seeds,
            rows,
        };
        self.store().put_new(&comparison_path(&dataset.id), &dataset)?;
        Ok(dataset)
    }
}

/// The pure part of simulate_plan.
pub fn simulate_with(plan: &ExecutionPlan, seed: u64) -> Result<SimulationResult> {
    simulate_parts(
        &plan.workflow,
        &plan.environment,
        plan.strategy,
        plan.scheduler,
        &plan.params,
        &plan.objectives,
        seed,
    )
    .map(|(offloading, schedule, metrics, devices)| SimulationResult {
        plan_id: plan.id.clone(),
        seed,
        scheduler: plan.scheduler,
        deadline_verdict: check_deadline(&metrics, &plan.objectives),
        offloading,
        schedule,
        metrics,
        devices,
    })
}

fn simulate_parts(
    dag: &WorkflowDag,
    env: &Environment,
    strategy: OffloadingStrategy,
    kind: SchedulerKind,
    params: &SchedulerParams,
    objectives: &Objectives,
    seed: u64,
) -> Result<(OffloadingPlan, Schedule, Metrics, Vec<DeviceUsage>)> {
    let offloading = offload(dag, env, strategy)?;
    let assignment = schedule(kind, dag, env, &offloading, objectives, &params.with_seed(seed))?;
    let (schedule, metrics) = simulate(dag, env, &assignment)?;
    let devices = device_accounting(env, &schedule, metrics.makespan);
    Ok((offloading, schedule, metrics, devices))
}

/// Builds the chart payloads. Pie counts sum to the task count and the line
/// has one row per task.
pub fn assemble_report(sim: &SimulationResult, run: Option<&RunDocument>, bar: Option<Vec<BarRow>>) -> Report {
    let line = sim
        .schedule
        .entries
        .iter()
        .map(|e| LineRow {
            task: e.task.clone(),
            simulated: e.finish - e.start,
            real: run.and_then(|d| d.record.real_durations.get(&e.task).copied()),
        })
        .collect();
    Report {
        plan_id: sim.plan_id.clone(),
        seed: sim.seed,
        run_id: run.map(|d| d.record.run_id.clone()),
        outcome: run.map(|d| d.record.outcome),
        bar,
        pie: edgeflow_core::sim::assignment_breakdown(&sim.schedule),
        line,
        gantt: sim.schedule.entries.clone(),
        deadline_verdict: sim.deadline_verdict,
        metrics: sim.metrics,
        task_status: run.map(|d| d.record.final_status()),
    }
}
