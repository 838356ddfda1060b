use std::sync::{Arc, Condvar, Mutex};
use std::thread;

use edgeflow_control::{CompareRequest, ControlError, Controller, PlanRequest, Store, WorkflowSource};
use edgeflow_core::executor::{RunOutcome, TaskRunner, TaskStatus};
use edgeflow_core::sim::DeadlineVerdict;
use edgeflow_core::workflow::PatternKind;
use edgeflow_core::{BindingKind, Error, Objectives, SchedulerKind, SchedulerParams, TaskSpec, Tier};

/// Holds every task until opened; fails the listed tasks.
#[derive(Default)]
struct Gate {
    open: Mutex<bool>,
    cv: Condvar,
    fail: Vec<String>,
}

impl Gate {
    fn opened(fail: &[&str]) -> Self {
        Gate { open: Mutex::new(true), cv: Condvar::new(), fail: fail.iter().map(|s| s.to_string()).collect() }
    }

    fn release(&self) {
        *self.open.lock().unwrap() = true;
        self.cv.notify_all();
    }
}

impl TaskRunner for Gate {
    fn run(&self, task: &TaskSpec) -> edgeflow_core::Result<String> {
        let mut open = self.open.lock().unwrap();
        while !*open {
            open = self.cv.wait(open).unwrap();
        }
        if self.fail.contains(&task.id) {
            return Err(Error::TaskPanic(format!("{} failed", task.id)));
        }
        Ok(String::new())
    }
}

fn montage(width: usize) -> PlanRequest {
    PlanRequest::new(WorkflowSource::Montage { width, length_profile: 1.0, data_profile: 1.0 })
}

fn hybrid(tasks: usize) -> PlanRequest {
    let mut req = PlanRequest::new(WorkflowSource::Pattern { pattern: PatternKind::Hybrid, tasks, seed: 11 });
    // Small populations keep the suite fast; defaults are covered elsewhere.
    req.params.pso.iterations = 20;
    req.params.ga.iterations = 20;
    req
}

fn controller(dir: &tempfile::TempDir) -> Controller {
    Controller::new(Store::open(dir.path()).unwrap())
}

#[test]
fn montage_width_five_builds_twenty_task_plan_that_reloads_byte_equal() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let plan = c.build_plan(&montage(5)).unwrap();
    assert_eq!(plan.workflow.tasks.len(), 20);
    assert_eq!(plan.scheduler, SchedulerKind::Ga);

    let raw = c.store().get_raw(&format!("plans/{}.json", plan.id)).unwrap().unwrap();
    let restarted = controller(&dir);
    let reloaded = restarted.get_plan(&plan.id).unwrap();
    assert_eq!(reloaded, plan);
    assert_eq!(serde_json::to_vec_pretty(&reloaded).unwrap(), raw);
}

#[test]
fn plan_ids_are_unique() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let ids: Vec<String> = (0..4).map(|_| c.build_plan(&hybrid(4)).unwrap().id).collect();
    let mut dedup = ids.clone();
    dedup.dedup();
    assert_eq!(ids, dedup);
}

#[test]
fn simulate_is_idempotent_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let plan = c.build_plan(&montage(5)).unwrap();
    let first = c.simulate_plan(&plan.id, None).unwrap();
    let path = format!("simulations/{}/seed-0.json", plan.id);
    let raw = c.store().get_raw(&path).unwrap().unwrap();

    let again = controller(&dir).simulate_plan(&plan.id, Some(0)).unwrap();
    assert_eq!(again, first);
    assert_eq!(c.store().get_raw(&path).unwrap().unwrap(), raw);

    assert!(first.metrics.makespan > 0.0);
    let off_device = first.schedule.entries.iter().any(|e| !e.node.starts_with("device"));
    assert_eq!(first.metrics.cost > 0.0, off_device);
}

#[test]
fn tight_deadline_is_reported_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let mut req = hybrid(8);
    req.objectives.deadline = Some(0.5);
    let plan = c.build_plan(&req).unwrap();
    let sim = c.simulate_plan(&plan.id, None).unwrap();
    assert!(sim.metrics.makespan > 0.5, "precondition: makespan {}", sim.metrics.makespan);
    assert_eq!(sim.deadline_verdict, DeadlineVerdict::Infeasible);
    assert_eq!(c.build_report(&plan.id, None, None).unwrap().deadline_verdict, DeadlineVerdict::Infeasible);
}

#[test]
fn execution_preconditions() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let plan = c.build_plan(&hybrid(5)).unwrap();
    assert!(matches!(c.execute_plan_real(&plan.id, None), Err(ControlError::PlanNotSimulated(..))));
    assert!(matches!(c.execute_plan_real("plan-404", None), Err(ControlError::PlanNotFound(_))));
    assert!(matches!(c.stream_events("run-404"), Err(ControlError::RunNotFound(_))));

    let mut req = hybrid(5);
    req.binding = BindingKind::SimulatedOnly;
    let unbound = c.build_plan(&req).unwrap();
    c.simulate_plan(&unbound.id, None).unwrap();
    let err = c.execute_plan_real(&unbound.id, None).unwrap_err();
    assert!(matches!(err, ControlError::Core(Error::UnboundTask(_))), "{err}");
}

#[test]
fn one_active_run_per_plan_and_streams_replay_then_follow() {
    let dir = tempfile::tempdir().unwrap();
    let gate = Arc::new(Gate::default());
    let c = Controller::with_runner(Store::open(dir.path()).unwrap(), gate.clone());
    let plan = c.build_plan(&hybrid(10)).unwrap();
    c.simulate_plan(&plan.id, None).unwrap();

    let run = c.execute_plan_real(&plan.id, None).unwrap();
    match c.execute_plan_real(&plan.id, None) {
        Err(ControlError::RunAlreadyActive { run: active, .. }) => assert_eq!(active, run),
        other => panic!("expected RunAlreadyActive, got {other:?}"),
    }
    assert!(matches!(c.get_run(&run), Err(ControlError::RunNotTerminal(_))));
    assert!(matches!(c.build_report(&plan.id, Some(&run), None), Err(ControlError::RunNotTerminal(_))));

    let subscribers: Vec<_> = (0..2)
        .map(|_| {
            let stream = c.stream_events(&run).unwrap();
            thread::spawn(move || stream.collect::<Vec<_>>())
        })
        .collect();
    gate.release();
    let seen: Vec<_> = subscribers.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(seen[0], seen[1]);

    let doc = c.wait_run(&run).unwrap();
    assert_eq!(doc.record.outcome, RunOutcome::Succeeded);
    assert_eq!(doc.record.events, seen[0]);
    let n = plan.workflow.tasks.len();
    assert!(doc.record.events[..n].iter().all(|e| e.status == TaskStatus::Standby));
    assert_eq!(c.stream_events(&run).unwrap().collect::<Vec<_>>(), seen[0]);
    assert_eq!(controller(&dir).stream_events(&run).unwrap().collect::<Vec<_>>(), seen[0]);

    // The plan is free again once the run ends.
    let second = c.execute_plan_real(&plan.id, None).unwrap();
    assert_ne!(second, run);
    c.wait_run(&second).unwrap();
}

#[test]
fn reports_before_and_after_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let plan = c.build_plan(&hybrid(10)).unwrap();
    assert!(matches!(c.build_report(&plan.id, None, None), Err(ControlError::PlanNotSimulated(..))));
    c.simulate_plan(&plan.id, None).unwrap();

    let sim_only = c.build_report(&plan.id, None, None).unwrap();
    assert_eq!(sim_only.pie.values().sum::<usize>(), 10);
    assert_eq!(sim_only.line.len(), 10);
    assert!(sim_only.line.iter().all(|l| l.real.is_none() && l.simulated > 0.0));
    assert!(sim_only.bar.is_none() && sim_only.run_id.is_none());

    let run = c.execute_plan_real(&plan.id, None).unwrap();
    c.wait_run(&run).unwrap();
    let full = c.build_report(&plan.id, Some(&run), None).unwrap();
    assert_eq!(full.outcome, Some(RunOutcome::Succeeded));
    assert!(full.line.iter().all(|l| l.real.is_some_and(|r| r >= 0.0)));
    assert!(full.task_status.unwrap().values().all(|s| *s == TaskStatus::Completed));
    assert_eq!(full.gantt, sim_only.gantt);

    let other = c.build_plan(&hybrid(3)).unwrap();
    c.simulate_plan(&other.id, None).unwrap();
    assert!(matches!(c.build_report(&other.id, Some(&run), None), Err(ControlError::InvalidRequest(_))));
}

#[test]
fn failed_task_fails_the_run_and_strands_descendants() {
    let dir = tempfile::tempdir().unwrap();
    let mut req = PlanRequest::new(WorkflowSource::Pattern { pattern: PatternKind::Sequential, tasks: 4, seed: 0 });
    req.scheduler = SchedulerKind::Fcfs;
    let c = Controller::with_runner(Store::open(dir.path()).unwrap(), Arc::new(Gate::opened(&[])));
    let plan = c.build_plan(&req).unwrap();
    let second = plan.workflow.validate().unwrap()[1].clone();
    let c = Controller::with_runner(Store::open(dir.path()).unwrap(), Arc::new(Gate::opened(&[&second])));
    c.simulate_plan(&plan.id, None).unwrap();
    let run = c.execute_plan_real(&plan.id, None).unwrap();
    let doc = c.wait_run(&run).unwrap();
    assert_eq!(doc.record.outcome, RunOutcome::Failed);
    let status = doc.record.final_status();
    assert_eq!(status[&second], TaskStatus::Failed);
    assert_eq!(status.values().filter(|s| **s == TaskStatus::Completed).count(), 1);
    assert_eq!(status.values().filter(|s| **s == TaskStatus::Standby).count(), 2);
}

#[test]
fn compare_defaults_rows_and_gate() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let mut light = SchedulerParams::default();
    light.pso.iterations = 20;
    light.ga.iterations = 20;
    let mut req = CompareRequest {
        workflow: Some(WorkflowSource::Montage { width: 5, length_profile: 1.0, data_profile: 1.0 }),
        params: Some(light),
        seeds: Some(vec![0, 1, 2]),
        ..Default::default()
    };
    let all = c.compare_algorithms(&req).unwrap();
    assert_eq!(all.rows.len(), 6);
    let algorithms: Vec<_> = all.rows.iter().map(|r| r.algorithm).collect();
    assert_eq!(algorithms, SchedulerKind::ALL.to_vec());
    let best_heuristic =
        all.rows.iter().filter(|r| r.algorithm.is_heuristic()).map(|r| r.time).fold(f64::INFINITY, f64::min);
    for r in all.rows.iter().filter(|r| !r.algorithm.is_heuristic()) {
        assert!(r.time <= best_heuristic, "{:?} {} > {}", r.algorithm, r.time, best_heuristic);
        assert_eq!(r.samples, 3);
    }
    assert!(all.rows.iter().all(|r| r.time > 0.0 && r.energy >= 0.0 && r.cost >= 0.0));

    req.algorithms = Some(vec![SchedulerKind::MinMin]);
    assert_eq!(c.compare_algorithms(&req).unwrap().rows.len(), 1);

    req.algorithms = None;
    req.objectives = Some(Objectives::weighted(0.5, 0.5, 0.0));
    let searched = c.compare_algorithms(&req).unwrap();
    assert_eq!(
        searched.rows.iter().map(|r| r.algorithm).collect::<Vec<_>>(),
        vec![SchedulerKind::Pso, SchedulerKind::Ga]
    );

    req.algorithms = Some(vec![SchedulerKind::Fcfs]);
    let err = c.compare_algorithms(&req).unwrap_err();
    assert!(matches!(err, ControlError::Core(Error::IncompatibleObjective(_))), "{err}");
}

#[test]
fn plan_comparison_feeds_report_bar_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let plan = c.build_plan(&hybrid(8)).unwrap();
    c.simulate_plan(&plan.id, None).unwrap();
    let req = CompareRequest { plan_id: Some(plan.id.clone()), seeds: Some(vec![3, 4]), ..Default::default() };
    let a = c.compare_algorithms(&req).unwrap();
    let b = c.compare_algorithms(&req).unwrap();
    assert_ne!(a.id, b.id);
    assert_eq!(a.rows, b.rows);
    assert_eq!(c.build_report(&plan.id, None, None).unwrap().bar, Some(b.rows));

    let conflicting = CompareRequest { objectives: Some(Objectives::time()), ..req };
    assert!(matches!(c.compare_algorithms(&conflicting), Err(ControlError::InvalidRequest(_))));
}

#[test]
fn environment_overrides_reach_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let c = controller(&dir);
    let mut req = hybrid(4);
    req.environment.counts.insert(Tier::Cloud, 3);
    let plan = c.build_plan(&req).unwrap();
    assert_eq!(plan.environment.nodes_in(Tier::Cloud).count(), 3);
}
