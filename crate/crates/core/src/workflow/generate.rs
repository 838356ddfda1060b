use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{DataEdge, TaskSpec, WorkflowDag};

/// Default payload carried by every Montage edge.
pub const MONTAGE_EDGE_BYTES: f64 = 1_000_000.0;

const BASE_MI: f64 = 1000.0;

// Length factors per Montage stage.
const PROJECT: f64 = 1.0;
const DIFF: f64 = 0.5;
const CONCAT: f64 = 0.8;
const BG_MODEL: f64 = 1.2;
const BACKGROUND: f64 = 0.6;
const IMG_TBL: f64 = 0.4;
const ADD: f64 = 2.0;
const SHRINK: f64 = 0.7;
const JPEG: f64 = 0.5;

/// Montage-shaped workflow with `3 * width + 5` tasks.
///
/// Projections feed adjacent-pair diffs, all diffs feed the concat/fit stage,
/// which feeds the background model. Each background correction consumes the
/// model and its own projection; all corrections feed the image table, then
/// add, shrink and jpeg run as a chain.
pub fn generate_montage(width: usize, length_profile: f64, data_profile: f64) -> Result<WorkflowDag> {
    if width < 2 {
        return Err(Error::InvalidWidth(width));
    }
    if !(length_profile.is_finite() && length_profile > 0.0) {
        return Err(Error::InvalidWorkflow(format!("length profile {length_profile} must be > 0")));
    }
    if !(data_profile.is_finite() && data_profile >= 0.0) {
        return Err(Error::InvalidWorkflow(format!("data profile {data_profile} must be >= 0")));
    }

    let digits = width.to_string().len().max(2);
    let indexed = |stage: &str, i: usize| format!("{stage}_{:0digits$}", i + 1);
    let bytes = (MONTAGE_EDGE_BYTES * data_profile).round() as u64;

    let mut dag = WorkflowDag::new(format!("montage-{width}"));
    let mut add = |id: String, factor: f64| {
        dag.tasks.push(TaskSpec::new(id, BASE_MI * factor * length_profile));
    };

    let projections: Vec<String> = (0..width).map(|i| indexed("mProject", i)).collect();
    let diffs: Vec<String> = (0..width - 1).map(|i| indexed("mDiffFit", i)).collect();
    let backgrounds: Vec<String> = (0..width).map(|i| indexed("mBackground", i)).collect();
    projections.iter().for_each(|id| add(id.clone(), PROJECT));
    diffs.iter().for_each(|id| add(id.clone(), DIFF));
    add("mConcatFit".into(), CONCAT);
    add("mBgModel".into(), BG_MODEL);
    backgrounds.iter().for_each(|id| add(id.clone(), BACKGROUND));
    add("mImgtbl".into(), IMG_TBL);
    add("mAdd".into(), ADD);
    add("mShrink".into(), SHRINK);
    add("mJPEG".into(), JPEG);

    let mut edge = |p: &str, c: &str| dag.edges.push(DataEdge::new(p, c, bytes));
    for (i, diff) in diffs.iter().enumerate() {
        edge(&projections[i], diff);
        edge(&projections[i + 1], diff);
    }
    for diff in &diffs {
        edge(diff, "mConcatFit");
    }
    edge("mConcatFit", "mBgModel");
    for (projection, background) in projections.iter().zip(&backgrounds) {
        edge("mBgModel", background);
        edge(projection, background);
    }
    for background in &backgrounds {
        edge(background, "mImgtbl");
    }
    edge("mImgtbl", "mAdd");
    edge("mAdd", "mShrink");
    edge("mShrink", "mJPEG");

    Ok(dag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    Sequential,
    Parallel,
    Hybrid,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Sequential => "sequential",
            PatternKind::Parallel => "parallel",
            PatternKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [PatternKind::Sequential, PatternKind::Parallel, PatternKind::Hybrid]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "pattern", value: s.to_string() })
    }
}

const PATTERN_EDGE_BYTES: u64 = 1_000_000;

/// Template workflows. Tasks are named `t1..tn` (zero-padded to the width of
/// `n`). Sequential and Parallel use 1000 MI tasks and 1 MB edges; Hybrid is
/// a seeded random layered DAG where every non-source task has at least one
/// parent in the previous layer.
pub fn generate_pattern(kind: PatternKind, n: usize, seed: u64) -> Result<WorkflowDag> {
    let min = match kind {
        PatternKind::Parallel => 3,
        _ => 1,
    };
    if n < min {
        return Err(Error::InvalidCount { kind: kind.name(), n });
    }
    let digits = n.to_string().len();
    let id = |i: usize| format!("t{:0digits$}", i + 1);

    let mut dag = WorkflowDag::new(format!("{}-{n}", kind.name()));
    match kind {
        PatternKind::Sequential => {
            dag.tasks = (0..n).map(|i| TaskSpec::new(id(i), BASE_MI)).collect();
            dag.edges = (1..n).map(|i| DataEdge::new(id(i - 1), id(i), PATTERN_EDGE_BYTES)).collect();
        }
        PatternKind::Parallel => {
            dag.tasks = (0..n).map(|i| TaskSpec::new(id(i), BASE_MI)).collect();
            for i in 1..n - 1 {
                dag.edges.push(DataEdge::new(id(0), id(i), PATTERN_EDGE_BYTES));
            }
            for i in 1..n - 1 {
                dag.edges.push(DataEdge::new(id(i), id(n - 1), PATTERN_EDGE_BYTES));
            }
        }
        PatternKind::Hybrid => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layers = ((n as f64).sqrt().round() as usize).clamp(1, n);
            let mut sizes = vec![1usize; layers];
            for _ in layers..n {
                sizes[rng.gen_range(0..layers)] += 1;
            }

            let mut previous: Vec<usize> = Vec::new();
            let mut next = 0;
            for size in sizes {
                let current: Vec<usize> = (next..next + size).collect();
                next += size;
                for &task in &current {
                    let length = f64::from(rng.gen_range(5u32..=30)) * 100.0;
                    dag.tasks.push(TaskSpec::new(id(task), length));
                    if previous.is_empty() {
                        continue;
                    }
                    let first = previous[rng.gen_range(0..previous.len())];
                    for &parent in &previous {
                        if parent == first || rng.gen_bool(0.3) {
                            let bytes = rng.gen_range(100_000u64..=2_000_000);
                            dag.edges.push(DataEdge::new(id(parent), id(task), bytes));
                        }
                    }
                }
                previous = current;
            }
        }
    }
    Ok(dag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(dag: &WorkflowDag) -> Vec<(String, String)> {
        dag.edges.iter().map(|e| (e.parent.clone(), e.child.clone())).collect()
    }

    #[test]
    fn montage_sizes() {
        assert_eq!(generate_montage(5, 1.0, 1.0).unwrap().tasks.len(), 20);
        assert_eq!(generate_montage(2, 1.0, 1.0).unwrap().tasks.len(), 11);
        assert_eq!(generate_montage(1, 1.0, 1.0), Err(Error::InvalidWidth(1)));
    }

    #[test]
    fn montage_profiles_scale() {
        let dag = generate_montage(3, 2.0, 0.5).unwrap();
        assert_eq!(dag.task("mAdd").unwrap().length, 4000.0);
        assert_eq!(dag.task("mProject_01").unwrap().length, 2000.0);
        assert!(dag.edges.iter().all(|e| e.bytes == 500_000));
    }

    #[test]
    fn sequential_and_parallel() {
        let seq = generate_pattern(PatternKind::Sequential, 3, 0).unwrap();
        assert_eq!(edge_set(&seq), vec![("t1".into(), "t2".into()), ("t2".into(), "t3".into())]);
        let par = generate_pattern(PatternKind::Parallel, 4, 0).unwrap();
        let mut edges = edge_set(&par);
        edges.sort();
        assert_eq!(
            edges,
            vec![
                ("t1".into(), "t2".into()),
                ("t1".into(), "t3".into()),
                ("t2".into(), "t4".into()),
                ("t3".into(), "t4".into()),
            ]
        );
        assert!(generate_pattern(PatternKind::Parallel, 2, 0).is_err());
        assert!(generate_pattern(PatternKind::Sequential, 0, 0).is_err());
        assert_eq!(generate_pattern(PatternKind::Sequential, 1, 0).unwrap().tasks.len(), 1);
    }

    #[test]
    fn hybrid_is_seeded() {
        let a = generate_pattern(PatternKind::Hybrid, 10, 7).unwrap();
        let b = generate_pattern(PatternKind::Hybrid, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tasks.len(), 10);
        a.validate().unwrap();
        let c = generate_pattern(PatternKind::Hybrid, 10, 8).unwrap();
        assert_ne!(a, c);
    }
}
