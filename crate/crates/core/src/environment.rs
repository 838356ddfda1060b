//! The three-tier computing environment and the primitive time, transfer and
//! cost formulas built on it.
//!
//! Node parameters default to the reference end-device / edge-server /
//! cloud-server table: 1000 / 1300 / 1600 MIPS, a device drawing 700 mW
//! running, 30 mW idle, 100 mW transmitting and 25 mW receiving, and busy
//! prices of $0.48 (edge) and $0.96 (cloud) per hour. Power is in mW, energy
//! in J, cost in dollars.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Device,
    Edge,
    Cloud,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Device, Tier::Edge, Tier::Cloud];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Device => "device",
            Tier::Edge => "edge",
            Tier::Cloud => "cloud",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownName { kind: "tier", value: s.to_string() })
    }
}

pub type NodeId = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub tier: Tier,
    pub mips: f64,
    pub p_run: f64,
    pub p_idle: f64,
    pub p_tx: f64,
    pub p_rx: f64,
    /// Dollars per busy hour.
    pub cost_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: Tier,
    pub b: Tier,
    pub bandwidth_bps: f64,
    pub latency_s: f64,
}

/// Bandwidth and latency per unordered tier pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub links: Vec<Link>,
}

const MBPS: f64 = 1_000_000.0;

impl Default for NetworkModel {
    fn default() -> Self {
        let link = |a, b, mbps| Link { a, b, bandwidth_bps: mbps * MBPS, latency_s: 0.0 };
        NetworkModel {
            links: vec![
                link(Tier::Device, Tier::Edge, 10.0),
                link(Tier::Device, Tier::Cloud, 5.0),
                link(Tier::Edge, Tier::Cloud, 100.0),
                link(Tier::Device, Tier::Device, 10.0),
                link(Tier::Edge, Tier::Edge, 100.0),
                link(Tier::Cloud, Tier::Cloud, 1000.0),
            ],
        }
    }
}

impl NetworkModel {
    pub fn link(&self, a: Tier, b: Tier) -> Option<&Link> {
        self.links.iter().find(|l| (l.a == a && l.b == b) || (l.a == b && l.b == a))
    }

    /// Replaces (or adds) the entry for the pair.
    pub fn set(&mut self, link: Link) {
        self.links.retain(|l| !((l.a == link.a && l.b == link.b) || (l.a == link.b && l.b == link.a)));
        self.links.push(link);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeClass {
    Small,
    #[default]
    Medium,
    Large,
}

impl SizeClass {
    /// Factor applied to MIPS and to the hourly price.
    pub fn multiplier(self) -> f64 {
        match self {
            SizeClass::Small => 0.75,
            SizeClass::Medium => 1.0,
            SizeClass::Large => 1.5,
        }
    }
}

impl FromStr for SizeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            _ => Err(Error::UnknownName { kind: "size class", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub nodes: Vec<NodeSpec>,
    pub network: NetworkModel,
    pub origin_device: NodeId,
}

impl Environment {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn nodes_in(&self, tier: Tier) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(move |n| n.tier == tier)
    }

    pub fn origin(&self) -> &NodeSpec {
        self.node(&self.origin_device).expect("validated environment has its origin device")
    }

    /// Highest-MIPS node of a tier, lowest id on ties.
    pub fn fastest_in(&self, tier: Tier) -> Option<&NodeSpec> {
        self.nodes_in(tier).fold(None, |best: Option<&NodeSpec>, n| match best {
            Some(b) if b.mips > n.mips || (b.mips == n.mips && b.id <= n.id) => Some(b),
            _ => Some(n),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(Error::InvalidEnvironment(format!("duplicate node id `{}`", n.id)));
            }
            if !(n.mips.is_finite() && n.mips > 0.0) {
                return Err(Error::InvalidEnvironment(format!("node `{}` has mips {}", n.id, n.mips)));
            }
            for (name, v) in [
                ("p_run", n.p_run),
                ("p_idle", n.p_idle),
                ("p_tx", n.p_tx),
                ("p_rx", n.p_rx),
                ("cost_rate", n.cost_rate),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidEnvironment(format!("node `{}` has {name} {v}", n.id)));
                }
            }
        }
        for tier in Tier::ALL {
            if self.nodes_in(tier).next().is_none() {
                return Err(Error::InvalidEnvironment(format!("no {tier} nodes")));
            }
        }
        match self.node(&self.origin_device) {
            Some(n) if n.tier == Tier::Device => {}
            Some(_) => {
                return Err(Error::InvalidEnvironment(format!("origin `{}` is not a device node", self.origin_device)))
            }
            None => return Err(Error::InvalidEnvironment(format!("origin `{}` does not exist", self.origin_device))),
        }
        for l in &self.network.links {
            if !(l.bandwidth_bps.is_finite() && l.bandwidth_bps > 0.0) || l.latency_s.is_nan() || l.latency_s < 0.0 {
                return Err(Error::InvalidEnvironment(format!(
                    "link {}-{} has bandwidth {} and latency {}",
                    l.a, l.b, l.bandwidth_bps, l.latency_s
                )));
            }
        }
        Ok(())
    }
}

fn medium_node(tier: Tier, index: usize) -> NodeSpec {
    let (mips, p_run, p_idle, p_tx, p_rx, cost_rate) = match tier {
        Tier::Device => (1000.0, 700.0, 30.0, 100.0, 25.0, 0.0),
        Tier::Edge => (1300.0, 0.0, 0.0, 0.0, 0.0, 0.48),
        Tier::Cloud => (1600.0, 0.0, 0.0, 0.0, 0.0, 0.96),
    };
    NodeSpec { id: format!("{}-{}", tier.name(), index + 1), tier, mips, p_run, p_idle, p_tx, p_rx, cost_rate }
}

pub const DEFAULT_COUNT: usize = 2;

/// Reference environment, scaled per tier by size class. Missing tiers
/// default to Medium and [`DEFAULT_COUNT`] nodes.
pub fn table1_environment(sizes: &BTreeMap<Tier, SizeClass>, counts: &BTreeMap<Tier, usize>) -> Result<Environment> {
    let mut nodes = Vec::new();
    for tier in Tier::ALL {
        let count = counts.get(&tier).copied().unwrap_or(DEFAULT_COUNT);
        if count == 0 {
            return Err(Error::InvalidCount { kind: "tier", n: count });
        }
        let factor = sizes.get(&tier).copied().unwrap_or_default().multiplier();
        for i in 0..count {
            let mut node = medium_node(tier, i);
            node.mips *= factor;
            node.cost_rate *= factor;
            nodes.push(node);
        }
    }
    let origin_device = nodes[0].id.clone();
    Ok(Environment { nodes, network: NetworkModel::default(), origin_device })
}

/// Seconds to run `task` on `node`.
pub fn exec_time(task: &TaskSpec, node: &NodeSpec) -> f64 {
    task.length / node.mips
}

pub fn transfer_time(bytes: u64, from: &NodeSpec, to: &NodeSpec, net: &NetworkModel) -> Result<f64> {
    if from.id == to.id {
        return Ok(0.0);
    }
    let link = net.link(from.tier, to.tier).ok_or(Error::MissingLink(from.tier, to.tier))?;
    Ok(link.latency_s + 8.0 * bytes as f64 / link.bandwidth_bps)
}

pub fn busy_cost(node: &NodeSpec, busy_seconds: f64) -> f64 {
    node.cost_rate * busy_seconds / 3600.0
}

/// Structured environment description accepted by plans and the CLI.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentConfig {
    pub sizes: BTreeMap<Tier, SizeClass>,
    pub counts: BTreeMap<Tier, usize>,
    pub node_overrides: Vec<NodeOverride>,
    pub links: Vec<Link>,
    pub origin_device: Option<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeOverride {
    pub id: NodeId,
    pub mips: Option<f64>,
    pub p_run: Option<f64>,
    pub p_idle: Option<f64>,
    pub p_tx: Option<f64>,
    pub p_rx: Option<f64>,
    pub cost_rate: Option<f64>,
}

impl EnvironmentConfig {
    pub fn build(&self) -> Result<Environment> {
        let mut env = table1_environment(&self.sizes, &self.counts)?;
        for o in &self.node_overrides {
            let node = env
                .nodes
                .iter_mut()
                .find(|n| n.id == o.id)
                .ok_or_else(|| Error::InvalidEnvironment(format!("override for unknown node `{}`", o.id)))?;
            let fields = [
                (&mut node.mips, o.mips),
                (&mut node.p_run, o.p_run),
                (&mut node.p_idle, o.p_idle),
                (&mut node.p_tx, o.p_tx),
                (&mut node.p_rx, o.p_rx),
                (&mut node.cost_rate, o.cost_rate),
            ];
            for (slot, value) in fields {
                if let Some(v) = value {
                    *slot = v;
                }
            }
        }
        for link in &self.links {
            env.network.set(link.clone());
        }
        if let Some(origin) = &self.origin_device {
            env.origin_device = origin.clone();
        }
        env.validate()?;
        Ok(env)
    }
}
