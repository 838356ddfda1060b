//! Workflow DAGs: tasks with compute demand, data-carrying dependency edges,
//! validation, and binding of abstract tasks to built-in computing tasks.

mod dax;
mod generate;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::executor::calibration::CalibrationConfig;

pub use dax::{parse_dax, to_dax, REFERENCE_MIPS};
pub use generate::{generate_montage, generate_pattern, PatternKind, MONTAGE_EDGE_BYTES};

pub type TaskId = String;

/// A built-in computing task a workflow task can be bound to, with the
/// parameters that fix its workload and its seeded inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskBinding {
    PiCalculation { terms: u64 },
    KmpMatch { text_len: u64, pattern_len: u64, seed: u64 },
    LevenshteinDistance { len_a: u64, len_b: u64, seed: u64 },
    SelectionSort { len: u64, seed: u64 },
    SimulatedOnly,
}

impl TaskBinding {
    pub fn kind(&self) -> BindingKind {
        match self {
            TaskBinding::PiCalculation { .. } => BindingKind::PiCalculation,
            TaskBinding::KmpMatch { .. } => BindingKind::KmpMatch,
            TaskBinding::LevenshteinDistance { .. } => BindingKind::LevenshteinDistance,
            TaskBinding::SelectionSort { .. } => BindingKind::SelectionSort,
            TaskBinding::SimulatedOnly => BindingKind::SimulatedOnly,
        }
    }

    pub fn is_executable(&self) -> bool {
        !matches!(self, TaskBinding::SimulatedOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingKind {
    PiCalculation,
    KmpMatch,
    LevenshteinDistance,
    SelectionSort,
    SimulatedOnly,
}

impl BindingKind {
    pub const ALL: [BindingKind; 5] = [
        BindingKind::PiCalculation,
        BindingKind::KmpMatch,
        BindingKind::LevenshteinDistance,
        BindingKind::SelectionSort,
        BindingKind::SimulatedOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BindingKind::PiCalculation => "pi-calculation",
            BindingKind::KmpMatch => "kmp-match",
            BindingKind::LevenshteinDistance => "levenshtein-distance",
            BindingKind::SelectionSort => "selection-sort",
            BindingKind::SimulatedOnly => "simulated-only",
        }
    }
}

impl fmt::Display for BindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BindingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BindingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "binding kind", value: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: TaskId,
    pub label: String,
    /// Compute demand in millions of instructions.
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<TaskBinding>,
}

impl TaskSpec {
    pub fn new(id: impl Into<String>, length: f64) -> Self {
        let id = id.into();
        TaskSpec { label: id.clone(), id, length, binding: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataEdge {
    pub parent: TaskId,
    pub child: TaskId,
    pub bytes: u64,
}

impl DataEdge {
    pub fn new(parent: impl Into<String>, child: impl Into<String>, bytes: u64) -> Self {
        DataEdge { parent: parent.into(), child: child.into(), bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowDag {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
    pub edges: Vec<DataEdge>,
}

impl WorkflowDag {
    pub fn new(name: impl Into<String>) -> Self {
        WorkflowDag { name: name.into(), tasks: Vec::new(), edges: Vec::new() }
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Checks every structural invariant and returns the deterministic
    /// topological order (ready ties broken by ascending task id).
    pub fn validate(&self) -> Result<Vec<TaskId>> {
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(self.tasks.len());
        for (i, task) in self.tasks.iter().enumerate() {
            if !(task.length.is_finite() && task.length > 0.0) {
                return Err(Error::InvalidWorkflow(format!(
                    "task `{}` has non-positive length {}",
                    task.id, task.length
                )));
            }
            if index.insert(task.id.as_str(), i).is_some() {
                return Err(Error::InvalidWorkflow(format!("duplicate task id `{}`", task.id)));
            }
        }

        let mut seen = BTreeSet::new();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.tasks.len()];
        let mut indegree = vec![0usize; self.tasks.len()];
        for edge in &self.edges {
            let p = *index.get(edge.parent.as_str()).ok_or_else(|| Error::UnknownJobReference(edge.parent.clone()))?;
            let c = *index.get(edge.child.as_str()).ok_or_else(|| Error::UnknownJobReference(edge.child.clone()))?;
            if p == c {
                return Err(Error::CyclicWorkflow(edge.parent.clone()));
            }
            if !seen.insert((p, c)) {
                return Err(Error::InvalidWorkflow(format!("duplicate edge {} -> {}", edge.parent, edge.child)));
            }
            children[p].push(c);
            indegree[c] += 1;
        }

        let mut ready: BinaryHeap<Reverse<(&str, usize)>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse((self.tasks[i].id.as_str(), i)))
            .collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(Reverse((id, i))) = ready.pop() {
            order.push(id.to_string());
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse((self.tasks[c].id.as_str(), c)));
                }
            }
        }
        if order.len() != self.tasks.len() {
            let stuck = indegree
                .iter()
                .enumerate()
                .filter(|(_, d)| **d > 0)
                .map(|(i, _)| self.tasks[i].id.as_str())
                .min()
                .unwrap_or_default();
            return Err(Error::CyclicWorkflow(stuck.to_string()));
        }
        Ok(order)
    }

    pub fn in_bytes(&self, id: &str) -> u64 {
        self.edges.iter().filter(|e| e.child == id).map(|e| e.bytes).sum()
    }

    pub fn out_bytes(&self, id: &str) -> u64 {
        self.edges.iter().filter(|e| e.parent == id).map(|e| e.bytes).sum()
    }

    pub fn is_entry(&self, id: &str) -> bool {
        !self.edges.iter().any(|e| e.child == id)
    }

    pub fn is_exit(&self, id: &str) -> bool {
        !self.edges.iter().any(|e| e.parent == id)
    }

    /// Bytes that must reach a task from the origin device when it runs
    /// off-device. Entry tasks have no in-edges, so their out-edge total
    /// stands in for the sensed input.
    pub fn input_payload(&self, id: &str) -> u64 {
        if self.is_entry(id) {
            self.out_bytes(id)
        } else {
            self.in_bytes(id)
        }
    }

    /// Bytes a task sends on. Exit tasks have no out-edges; their in-edge
    /// total stands in for the result returned to the origin device.
    pub fn output_payload(&self, id: &str) -> u64 {
        if self.is_exit(id) {
            self.in_bytes(id)
        } else {
            self.out_bytes(id)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workflow serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dag: WorkflowDag = serde_json::from_str(text).map_err(|e| Error::InvalidWorkflow(e.to_string()))?;
        dag.validate()?;
        Ok(dag)
    }
}

/// Deterministic topological order; see [`WorkflowDag::validate`].
pub fn validate(dag: &WorkflowDag) -> Result<Vec<TaskId>> {
    dag.validate()
}

/// Binds every unbound task to `default_kind` with the default calibration.
pub fn bind_tasks(dag: &WorkflowDag, default_kind: BindingKind) -> WorkflowDag {
    bind_tasks_with(dag, default_kind, &CalibrationConfig::default())
}

pub fn bind_tasks_with(dag: &WorkflowDag, default_kind: BindingKind, calibration: &CalibrationConfig) -> WorkflowDag {
    let mut out = dag.clone();
    for task in out.tasks.iter_mut().filter(|t| t.binding.is_none()) {
        task.binding = Some(calibration.calibrate(task.length, default_kind, seed_from_id(&task.id)));
    }
    out
}

/// Stable 64-bit FNV-1a of a task id; seeds the built-in task inputs.
pub fn seed_from_id(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}
