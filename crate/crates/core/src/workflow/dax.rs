//! Reader and writer for the DAX subset: `adag` root, `job` elements with
//! nested `uses`, and `child`/`parent` dependency elements. Other attributes
//! are ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{DataEdge, TaskSpec, WorkflowDag};

/// MIPS rating used to turn a DAX runtime (seconds) into a length in MI.
pub const REFERENCE_MIPS: f64 = 1000.0;

#[derive(Default)]
struct JobFiles {
    inputs: BTreeSet<String>,
    outputs: BTreeMap<String, u64>,
}

pub fn parse_dax(xml_text: &str) -> Result<WorkflowDag> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| Error::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "adag" {
        return Err(malformed(&doc, root, format!("root element is `{}`, expected `adag`", root.tag_name().name())));
    }

    let mut dag = WorkflowDag::new(root.attribute("name").unwrap_or("workflow"));
    let mut files: HashMap<String, JobFiles> = HashMap::new();

    for job in root.children().filter(|n| n.has_tag_name_local("job")) {
        let id = required(&doc, job, "id")?;
        let runtime_text = required(&doc, job, "runtime")?;
        let runtime: f64 = runtime_text
            .trim()
            .parse()
            .map_err(|_| malformed(&doc, job, format!("runtime `{runtime_text}` is not a number")))?;
        if !(runtime.is_finite() && runtime > 0.0) {
            return Err(Error::InvalidWorkflow(format!("job `{id}` has non-positive runtime {runtime_text}")));
        }
        if files.contains_key(id) {
            return Err(Error::InvalidWorkflow(format!("duplicate job id `{id}`")));
        }

        let mut job_files = JobFiles::default();
        for uses in job.children().filter(|n| n.has_tag_name_local("uses")) {
            let file = required(&doc, uses, "file")?.to_string();
            let size = match uses.attribute("size") {
                None => 0,
                Some(text) => {
                    let value: i64 = text
                        .trim()
                        .parse()
                        .map_err(|_| malformed(&doc, uses, format!("size `{text}` is not an integer")))?;
                    if value < 0 {
                        return Err(Error::NegativeSize { file, value: text.to_string() });
                    }
                    value as u64
                }
            };
            match uses.attribute("link") {
                Some("input") => {
                    job_files.inputs.insert(file);
                }
                Some("output") => {
                    job_files.outputs.insert(file, size);
                }
                Some(other) => {
                    return Err(malformed(&doc, uses, format!("unknown link `{other}`")));
                }
                None => return Err(malformed(&doc, uses, "missing attribute `link`".into())),
            }
        }
        files.insert(id.to_string(), job_files);

        dag.tasks.push(TaskSpec {
            id: id.to_string(),
            label: job.attribute("name").unwrap_or(id).to_string(),
            length: runtime * REFERENCE_MIPS,
            binding: None,
        });
    }

    let mut pairs = BTreeSet::new();
    for child in root.children().filter(|n| n.has_tag_name_local("child")) {
        let child_id = required(&doc, child, "ref")?;
        if !files.contains_key(child_id) {
            return Err(Error::UnknownJobReference(child_id.to_string()));
        }
        for parent in child.children().filter(|n| n.has_tag_name_local("parent")) {
            let parent_id = required(&doc, parent, "ref")?;
            if !files.contains_key(parent_id) {
                return Err(Error::UnknownJobReference(parent_id.to_string()));
            }
            if parent_id == child_id {
                return Err(Error::CyclicWorkflow(child_id.to_string()));
            }
            if !pairs.insert((parent_id.to_string(), child_id.to_string())) {
                continue;
            }
            let produced = &files[parent_id].outputs;
            let bytes = files[child_id].inputs.iter().filter_map(|f| produced.get(f)).sum();
            dag.edges.push(DataEdge::new(parent_id, child_id, bytes));
        }
    }

    dag.validate()?;
    Ok(dag)
}

/// Writes a DAG in the DAX subset. Every edge carries one output/input file
/// pair so that [`parse_dax`] recovers its byte size. Bindings are not
/// representable in DAX and are dropped.
pub fn to_dax(dag: &WorkflowDag) -> String {
    let mut inputs: HashMap<&str, Vec<(String, u64)>> = HashMap::new();
    let mut outputs: HashMap<&str, Vec<(String, u64)>> = HashMap::new();
    for (k, edge) in dag.edges.iter().enumerate() {
        let file = format!("edge_{k:05}.dat");
        outputs.entry(edge.parent.as_str()).or_default().push((file.clone(), edge.bytes));
        inputs.entry(edge.child.as_str()).or_default().push((file, edge.bytes));
    }

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<adag name=\"{}\" jobCount=\"{}\" childCount=\"{}\">",
        escape(&dag.name),
        dag.tasks.len(),
        dag.edges.iter().map(|e| e.child.as_str()).collect::<BTreeSet<_>>().len()
    );
    for task in &dag.tasks {
        let _ = writeln!(
            out,
            "  <job id=\"{}\" name=\"{}\" runtime=\"{}\">",
            escape(&task.id),
            escape(&task.label),
            task.length / REFERENCE_MIPS
        );
        for (link, list) in [("input", &inputs), ("output", &outputs)] {
            for (file, size) in list.get(task.id.as_str()).into_iter().flatten() {
                let _ = writeln!(out, "    <uses file=\"{file}\" link=\"{link}\" size=\"{size}\"/>");
            }
        }
        out.push_str("  </job>\n");
    }

    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for edge in &dag.edges {
        parents.entry(edge.child.as_str()).or_default().push(edge.parent.as_str());
    }
    for task in &dag.tasks {
        if let Some(list) = parents.get(task.id.as_str()) {
            let _ = writeln!(out, "  <child ref=\"{}\">", escape(&task.id));
            for p in list {
                let _ = writeln!(out, "    <parent ref=\"{}\"/>", escape(p));
            }
            out.push_str("  </child>\n");
        }
    }
    out.push_str("</adag>\n");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn required<'a>(doc: &roxmltree::Document, node: roxmltree::Node<'a, '_>, attr: &str) -> Result<&'a str> {
    node.attribute(attr)
        .ok_or_else(|| malformed(doc, node, format!("`{}` is missing attribute `{attr}`", node.tag_name().name())))
}

fn malformed(doc: &roxmltree::Document, node: roxmltree::Node, msg: String) -> Error {
    let pos = doc.text_pos_at(node.range().start);
    Error::MalformedXml(format!("{msg} at {}:{}", pos.row, pos.col))
}

trait LocalName {
    fn has_tag_name_local(&self, name: &str) -> bool;
}

impl LocalName for roxmltree::Node<'_, '_> {
    fn has_tag_name_local(&self, name: &str) -> bool {
        self.is_element() && self.tag_name().name() == name
    }
}
