//! File-backed, append-only document store.
//!
//! Layout under the root directory:
//!
//! ```text
//! index.json                         id counters
//! plans/{plan}.json
//! simulations/{plan}/seed-{seed}.json
//! runs/{run}.json
//! comparisons/{cmp}.json
//! ```
//!
//! Documents are written once, through a temporary file and a rename, and
//! never modified afterwards.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, Result};

const DIRS: [&str; 4] = ["plans", "simulations", "runs", "comparisons"];

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    counters: BTreeMap<String, u64>,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    index: Mutex<()>,
}

/// Outcome of [`Store::put_new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Put {
    Written,
    AlreadyExists,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for d in DIRS {
            fs::create_dir_all(root.join(d))?;
        }
        Ok(Store { root, index: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Next id with the given prefix, e.g. `plan-000001`.
    pub fn next_id(&self, prefix: &str) -> Result<String> {
        let _guard = self.index.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.root.join("index.json");
        let mut index: Index = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)?,
            Err(e) if e.kind() == ErrorKind::NotFound => Index::default(),
            Err(e) => return Err(e.into()),
        };
        let n = index.counters.entry(prefix.to_string()).or_insert(0);
        *n += 1;
        let id = format!("{prefix}-{n:06}");
        write_atomic(&path, &serde_json::to_vec_pretty(&index)?)?;
        Ok(id)
    }

    /// Writes a document unless one already exists at `rel`.
    pub fn put_new<T: Serialize>(&self, rel: &str, doc: &T) -> Result<Put> {
        let path = self.path(rel)?;
        if path.exists() {
            return Ok(Put::AlreadyExists);
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let bytes = serde_json::to_vec_pretty(doc)?;
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        fs::write(&tmp, bytes)?;
        // hard_link fails if the target exists, which keeps writes append-only
        // under concurrent writers.
        let linked = fs::hard_link(&tmp, &path);
        fs::remove_file(&tmp)?;
        match linked {
            Ok(()) => Ok(Put::Written),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Ok(Put::AlreadyExists),
            Err(e) => Err(e.into()),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, rel: &str) -> Result<Option<T>> {
        match fs::read(self.path(rel)?) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn get_raw(&self, rel: &str) -> Result<Option<Vec<u8>>> {
        match fs::read(self.path(rel)?) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Document ids (file stems) in a directory, sorted.
    pub fn list(&self, dir: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let path = self.path(dir)?;
        if !path.exists() {
            return Ok(out);
        }
        for entry in fs::read_dir(path)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".json") {
                out.push(stem.to_string());
            }
        }
        out.sort();
        Ok(out)
    }

    fn path(&self, rel: &str) -> Result<PathBuf> {
        if rel.split('/').any(|c| c.is_empty() || c == "." || c == ".." || c.contains('\\')) {
            return Err(ControlError::InvalidRequest(format!("bad document path `{rel}`")));
        }
        Ok(self.root.join(rel))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn plan_path(plan: &str) -> String {
    format!("plans/{plan}.json")
}

pub fn simulation_path(plan: &str, seed: u64) -> String {
    format!("simulations/{plan}/seed-{seed}.json")
}

pub fn run_path(run: &str) -> String {
    format!("runs/{run}.json")
}

pub fn comparison_path(id: &str) -> String {
    format!("comparisons/{id}.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_sequential_per_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.next_id("plan").unwrap(), "plan-000001");
        assert_eq!(store.next_id("plan").unwrap(), "plan-000002");
        assert_eq!(store.next_id("run").unwrap(), "run-000001");
        let reopened = Store::open(dir.path()).unwrap();
        assert_eq!(reopened.next_id("plan").unwrap(), "plan-000003");
    }

    #[test]
    fn documents_are_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.put_new("plans/a.json", &1u32).unwrap(), Put::Written);
        assert_eq!(store.put_new("plans/a.json", &2u32).unwrap(), Put::AlreadyExists);
        assert_eq!(store.get::<u32>("plans/a.json").unwrap(), Some(1));
        assert_eq!(store.get::<u32>("plans/b.json").unwrap(), None);
        assert_eq!(store.list("plans").unwrap(), vec!["a"]);
        assert!(store.get::<u32>("../x.json").is_err());
    }
}
