//! Command line interface. Every subcommand prints one JSON document to
//! stdout, or to `--out`.

use std::collections::BTreeMap;
use std::fs;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use edgeflow_core::environment::SizeClass;
use edgeflow_core::executor::RunOutcome;
use edgeflow_core::workflow::PatternKind;
use edgeflow_core::{
    BindingKind, EnvironmentConfig, Objectives, OffloadingStrategy, SchedulerKind, SchedulerParams, Tier,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{ControlError, Result};
use crate::http;
use crate::plan::{PlanRequest, WorkflowSource};
use crate::service::{CompareRequest, Controller};
use crate::store::Store;

#[derive(Debug, Parser)]
#[command(
    name = "edgeflow",
    version,
    about = "Plan, simulate and run DAG workflows across device, edge and cloud nodes"
)]
pub struct Cli {
    /// Directory of the document store.
    #[arg(long, global = true, env = "EDGEFLOW_STORE", default_value = "edgeflow-store")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and persist an execution plan.
    Plan(Box<PlanArgs>),
    /// Offload, schedule and simulate a plan.
    Simulate {
        plan: String,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Execute a simulated plan on the local worker pool and wait for it.
    Run {
        plan: String,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Chart payloads for a simulation and optionally a finished run.
    Report {
        plan: String,
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Compare scheduling algorithms on a plan or a request document.
    Compare {
        #[arg(long, conflicts_with = "request")]
        plan: Option<String>,
        /// Comparison request document.
        #[arg(long)]
        request: Option<PathBuf>,
        /// Comma-separated algorithm names.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<SchedulerKind>>,
        /// Comma-separated seeds for PSO and GA.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[command(flatten)]
        out: Out,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = http::PORT_ENV, default_value_t = http::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = Ipv4Addr::LOCALHOST)]
        host: Ipv4Addr,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Out {
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Plan request document; flags below override its fields.
    #[arg(long)]
    pub request: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    /// Montage workflow of this width.
    #[arg(long, conflicts_with_all = ["pattern", "dax", "dag"])]
    pub montage: Option<usize>,
    #[arg(long, default_value_t = 1.0, requires = "montage")]
    pub length_profile: f64,
    #[arg(long, default_value_t = 1.0, requires = "montage")]
    pub data_profile: f64,
    /// Random workflow of this shape.
    #[arg(long, requires = "tasks", conflicts_with_all = ["dax", "dag"])]
    pub pattern: Option<PatternKind>,
    #[arg(long, requires = "pattern")]
    pub tasks: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "pattern")]
    pub pattern_seed: u64,
    /// DAX file.
    #[arg(long, conflicts_with = "dag")]
    pub dax: Option<PathBuf>,
    /// Workflow document.
    #[arg(long)]
    pub dag: Option<PathBuf>,
    /// Built-in task bound to tasks that have none.
    #[arg(long)]
    pub binding: Option<BindingKind>,
    /// Environment document.
    #[arg(long)]
    pub environment: Option<PathBuf>,
    /// Size class per tier, e.g. `edge=large`, or a class for all tiers.
    #[arg(long = "size", value_parser = parse_size)]
    pub sizes: Vec<(Option<Tier>, SizeClass)>,
    /// Node count per tier, e.g. `cloud=3`.
    #[arg(long = "count", value_parser = parse_count)]
    pub counts: Vec<(Tier, usize)>,
    #[arg(long)]
    pub strategy: Option<OffloadingStrategy>,
    #[arg(long)]
    pub scheduler: Option<SchedulerKind>,
    /// Scheduler hyperparameter document.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Objective weights; unspecified weights become 0 once any is given.
    #[arg(long)]
    pub w_time: Option<f64>,
    #[arg(long)]
    pub w_energy: Option<f64>,
    #[arg(long)]
    pub w_cost: Option<f64>,
    /// Deadline in seconds.
    #[arg(long)]
    pub deadline: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: Out,
}

fn parse_size(s: &str) -> std::result::Result<(Option<Tier>, SizeClass), String> {
    match s.split_once('=') {
        Some((tier, class)) => {
            Ok((Some(tier.parse().map_err(|e| format!("{e}"))?), class.parse().map_err(|e| format!("{e}"))?))
        }
        None => Ok((None, s.parse().map_err(|e| format!("{e}"))?)),
    }
}

fn parse_count(s: &str) -> std::result::Result<(Tier, usize), String> {
    let (tier, n) = s.split_once('=').ok_or("expected tier=count")?;
    Ok((tier.parse().map_err(|e| format!("{e}"))?, n.parse().map_err(|e| format!("{e}"))?))
}

fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| ControlError::InvalidRequest(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| ControlError::InvalidRequest(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ControlError::InvalidRequest(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(doc: &T, out: &Out) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

impl PlanArgs {
    /// The plan request described by the file and flags.
    pub fn to_request(&self) -> Result<PlanRequest> {
        let source = if let Some(width) = self.montage {
            Some(WorkflowSource::Montage {
                width,
                length_profile: self.length_profile,
                data_profile: self.data_profile,
            })
        } else if let (Some(pattern), Some(tasks)) = (self.pattern, self.tasks) {
            Some(WorkflowSource::Pattern { pattern, tasks, seed: self.pattern_seed })
        } else if let Some(path) = &self.dax {
            Some(WorkflowSource::Dax { xml: read_text(path)? })
        } else if let Some(path) = &self.dag {
            Some(WorkflowSource::Dag { dag: read_doc(path)? })
        } else {
            None
        };
        let mut req = match (&self.request, source) {
            (Some(path), source) => {
                let mut req: PlanRequest = read_doc(path)?;
                if let Some(s) = source {
                    req.workflow = s;
                }
                req
            }
            (None, Some(s)) => PlanRequest::new(s),
            (None, None) => {
                return Err(ControlError::InvalidRequest(
                    "a workflow is required: --request, --montage, --pattern, --dax or --dag".into(),
                ))
            }
        };
        if let Some(name) = &self.name {
            req.name = Some(name.clone());
        }
        if let Some(b) = self.binding {
            req.binding = b;
        }
        if let Some(path) = &self.environment {
            req.environment = read_doc::<EnvironmentConfig>(path)?;
        }
        for &(tier, class) in &self.sizes {
            match tier {
                Some(t) => {
                    req.environment.sizes.insert(t, class);
                }
                None => req.environment.sizes = Tier::ALL.iter().map(|&t| (t, class)).collect::<BTreeMap<_, _>>(),
            }
        }
        for &(tier, n) in &self.counts {
            req.environment.counts.insert(tier, n);
        }
        if let Some(s) = self.strategy {
            req.strategy = s;
        }
        if let Some(s) = self.scheduler {
            req.scheduler = s;
        }
        if let Some(path) = &self.params {
            req.params = read_doc::<SchedulerParams>(path)?;
        }
        if self.w_time.is_some() || self.w_energy.is_some() || self.w_cost.is_some() {
            let deadline = req.objectives.deadline;
            req.objectives = Objectives::weighted(
                self.w_time.unwrap_or(0.0),
                self.w_energy.unwrap_or(0.0),
                self.w_cost.unwrap_or(0.0),
            );
            req.objectives.deadline = deadline;
        }
        if let Some(d) = self.deadline {
            req.objectives.deadline = Some(d);
        }
        if let Some(seed) = self.seed {
            req.seed = seed;
        }
        Ok(req)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let controller = Controller::new(Store::open(&cli.store)?);
    match cli.command {
        Command::Plan(args) => emit(&controller.build_plan(&args.to_request()?)?, &args.out),
        Command::Simulate { plan, seed, out } => emit(&controller.simulate_plan(&plan, seed)?, &out),
        Command::Run { plan, seed, out } => {
            let run_id = controller.execute_plan_real(&plan, seed)?;
            let doc = controller.wait_run(&run_id)?;
            emit(&doc, &out)?;
            match doc.record.outcome {
                RunOutcome::Succeeded => Ok(()),
                other => Err(ControlError::RunFailed { run: run_id, outcome: format!("{other:?}").to_lowercase() }),
            }
        }
        Command::Report { plan, run, seed, out } => emit(&controller.build_report(&plan, run.as_deref(), seed)?, &out),
        Command::Compare { plan, request, algorithms, seeds, out } => {
            let mut req = match &request {
                Some(path) => read_doc::<CompareRequest>(path)?,
                None => CompareRequest::default(),
            };
            if plan.is_some() {
                req.plan_id = plan;
            }
            if algorithms.is_some() {
                req.algorithms = algorithms;
            }
            if seeds.is_some() {
                req.seeds = seeds;
            }
            emit(&controller.compare_algorithms(&req)?, &out)
        }
        Command::Serve { port, host } => {
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(http::serve(controller, SocketAddr::from((host, port))))
        }
    }
}
