//! Node and VM telemetry snapshots, the two decision matrices built from them, and the
//! volume / volume-to-size baseline metrics.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{LinguisticRank, TriangularFuzzyNumber};
use crate::topsis::{Cell, Criterion, DataKind, DecisionMatrix, TopsisError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("at least one node is required")]
    NoNodes,
    #[error("at least one VM is required")]
    NoVms,
    #[error("VMs span several hosts: expected `{expected}`, found `{found}`")]
    MixedHosts { expected: String, found: String },
    #[error("{resource} utilization {value} saturates the volume metric")]
    Saturated { resource: &'static str, value: f64 },
    #[error("VM size must be positive, got {0} GB")]
    InvalidSize(f64),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("failed to parse snapshot: {0}")]
    Parse(String),
    #[error("failed to read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Topsis(#[from] TopsisError),
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ClusterError {
    ClusterError::Invalid { path: path.into(), reason: reason.into() }
}

/// Quantizes a host's VM count relative to its slot capacity onto the seven linguistic levels.
///
/// `edges[k]` is the smallest count/slots ratio that reaches level `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmCountScale {
    pub edges: [f64; 6],
}

impl Default for VmCountScale {
    fn default() -> Self {
        let mut edges = [0.0; 6];
        for (k, e) in edges.iter_mut().enumerate() {
            *e = (k + 1) as f64 / 7.0;
        }
        Self { edges }
    }
}

impl VmCountScale {
    pub fn level(&self, count: u32, slots: u32) -> LinguisticRank {
        let ratio = if slots == 0 { 1.0 } else { (f64::from(count) / f64::from(slots)).min(1.0) };
        let idx = self.edges.iter().filter(|e| ratio >= **e).count();
        LinguisticRank::from_index(idx).expect("at most six edges")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub node_id: String,
    pub cpu_util: f64,
    pub ram_util: f64,
    pub net_util: f64,
    /// Hosted VMs.
    pub vm_count: u32,
    /// Number of VMs the host is sized for; the count is judged relative to it.
    pub vm_slots: u32,
    pub cpu_clock_ghz: f64,
    pub net_bw_mbps: f64,
    /// Temperature on the 0–100 membership axis.
    pub temperature: TriangularFuzzyNumber<f64>,
    pub ram_capacity_gb: f64,
    pub ram_free_gb: f64,
}

impl NodeSnapshot {
    pub fn vm_load(&self, scale: &VmCountScale) -> LinguisticRank {
        scale.level(self.vm_count, self.vm_slots)
    }

    pub fn validate(&self, path: &str) -> Result<(), ClusterError> {
        if self.node_id.is_empty() {
            return Err(invalid(format!("{path}.node_id"), "must not be empty"));
        }
        for (name, v) in
            [("cpu_util", self.cpu_util), ("ram_util", self.ram_util), ("net_util", self.net_util)]
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{path}.{name}"), format!("{v} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("cpu_clock_ghz", self.cpu_clock_ghz),
            ("net_bw_mbps", self.net_bw_mbps),
            ("ram_capacity_gb", self.ram_capacity_gb),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{path}.{name}"), format!("{v} must be positive")));
            }
        }
        if !(self.ram_free_gb >= 0.0 && self.ram_free_gb <= self.ram_capacity_gb + 1e-9) {
            return Err(invalid(
                format!("{path}.ram_free_gb"),
                format!("{} outside [0, ram_capacity_gb]", self.ram_free_gb),
            ));
        }
        if self.temperature.lower() < 0.0 {
            return Err(invalid(format!("{path}.temperature"), "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmSnapshot {
    pub vm_id: String,
    pub host_id: String,
    /// Share of the host CPU used by this VM.
    pub cpu_util: f64,
    /// Share of the host RAM actively used by this VM.
    pub ram_util: f64,
    /// Share of the host network bandwidth used by this VM.
    pub net_util: f64,
    /// Memory footprint; this is what a migration copies.
    pub ram_usage_gb: f64,
    pub qos: LinguisticRank,
}

impl VmSnapshot {
    pub fn validate(&self, path: &str) -> Result<(), ClusterError> {
        if self.vm_id.is_empty() {
            return Err(invalid(format!("{path}.vm_id"), "must not be empty"));
        }
        for (name, v) in
            [("cpu_util", self.cpu_util), ("ram_util", self.ram_util), ("net_util", self.net_util)]
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{path}.{name}"), format!("{v} outside [0, 1]")));
            }
        }
        if !(self.ram_usage_gb.is_finite() && self.ram_usage_gb >= 0.0) {
            return Err(invalid(format!("{path}.ram_usage_gb"), "must be a nonnegative size"));
        }
        Ok(())
    }
}

/// Criteria of the node-level ranking, in table order.
pub fn node_criteria() -> Vec<Criterion> {
    use DataKind::*;
    use LinguisticRank::*;
    vec![
        Criterion::benefit("CPU%", VeryHigh, Crisp),
        Criterion::benefit("RAM%", MoLLow, Crisp),
        Criterion::benefit("NET%", MoLLow, Crisp),
        Criterion::benefit("#VM", Low, Linguistic),
        Criterion::cost("CPU cycle", VeryHigh, Crisp),
        Criterion::cost("NET BW", MoLLow, Crisp),
        Criterion::benefit("TMP", Medium, Fuzzy),
        Criterion::cost("RAM capacity", MoLLow, Crisp),
    ]
}

/// Criteria of the VM-level ranking, in table order.
pub fn vm_criteria() -> Vec<Criterion> {
    use DataKind::*;
    use LinguisticRank::*;
    vec![
        Criterion::benefit("CPU%", VeryHigh, Crisp),
        Criterion::benefit("RAM%", MoLLow, Crisp),
        Criterion::benefit("NET%", MoLLow, Crisp),
        Criterion::cost("RAM usage", High, Crisp),
        Criterion::benefit("QoS", High, Linguistic),
    ]
}

pub fn node_decision_matrix(nodes: &[NodeSnapshot]) -> Result<DecisionMatrix<f64>, ClusterError> {
    node_decision_matrix_with(nodes, &VmCountScale::default())
}

pub fn node_decision_matrix_with(
    nodes: &[NodeSnapshot],
    scale: &VmCountScale,
) -> Result<DecisionMatrix<f64>, ClusterError> {
    if nodes.is_empty() {
        return Err(ClusterError::NoNodes);
    }
    let rows = nodes
        .iter()
        .map(|n| {
            vec![
                Cell::Crisp(n.cpu_util * 100.0),
                Cell::Crisp(n.ram_util * 100.0),
                Cell::Crisp(n.net_util * 100.0),
                Cell::Linguistic(n.vm_load(scale)),
                Cell::Crisp(n.cpu_clock_ghz),
                Cell::Crisp(n.net_bw_mbps),
                Cell::Fuzzy(n.temperature),
                Cell::Crisp(n.ram_capacity_gb),
            ]
        })
        .collect();
    let ids = nodes.iter().map(|n| n.node_id.clone()).collect();
    Ok(DecisionMatrix::new(ids, node_criteria(), rows)?)
}

pub fn vm_decision_matrix(vms: &[VmSnapshot]) -> Result<DecisionMatrix<f64>, ClusterError> {
    let first = vms.first().ok_or(ClusterError::NoVms)?;
    if let Some(other) = vms.iter().find(|v| v.host_id != first.host_id) {
        return Err(ClusterError::MixedHosts {
            expected: first.host_id.clone(),
            found: other.host_id.clone(),
        });
    }
    let rows = vms
        .iter()
        .map(|v| {
            vec![
                Cell::Crisp(v.cpu_util * 100.0),
                Cell::Crisp(v.ram_util * 100.0),
                Cell::Crisp(v.net_util * 100.0),
                Cell::Crisp(v.ram_usage_gb),
                Cell::Linguistic(v.qos),
            ]
        })
        .collect();
    let ids = vms.iter().map(|v| v.vm_id.clone()).collect();
    Ok(DecisionMatrix::new(ids, vm_criteria(), rows)?)
}

/// Combined load `1/(1-cpu) * 1/(1-net) * 1/(1-mem)`.
pub fn sandpiper_volume(cpu: f64, net: f64, mem: f64) -> Result<f64, ClusterError> {
    let mut volume = 1.0;
    for (resource, u) in [("cpu", cpu), ("net", net), ("mem", mem)] {
        if !(0.0..1.0).contains(&u) {
            if u >= 1.0 {
                return Err(ClusterError::Saturated { resource, value: u });
            }
            return Err(invalid(resource, format!("utilization {u} outside [0, 1)")));
        }
        volume /= 1.0 - u;
    }
    Ok(volume)
}

/// Volume-to-size ratio; size is the memory footprint in GB.
pub fn vsr(volume: f64, size_gb: f64) -> Result<f64, ClusterError> {
    if !(size_gb.is_finite() && size_gb > 0.0) {
        return Err(ClusterError::InvalidSize(size_gb));
    }
    Ok(volume / size_gb)
}

/// Maps a volume onto `[0, 1)`: `1 - 1/volume`, i.e. one minus the product of idle fractions.
pub fn volume_score(volume: f64) -> f64 {
    1.0 - 1.0 / volume
}

/// Nodes and VMs of a cluster at one instant, as read from a snapshot file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    #[serde(default)]
    pub nodes: Vec<NodeSnapshot>,
    #[serde(default)]
    pub vms: Vec<VmSnapshot>,
}

impl ClusterSnapshot {
    pub fn from_toml_str(text: &str) -> Result<Self, ClusterError> {
        let snap: Self = toml::from_str(text).map_err(|e| ClusterError::Parse(e.to_string()))?;
        snap.validate()?;
        Ok(snap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClusterError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClusterError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("snapshot serializes")
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.nodes.is_empty() {
            return Err(ClusterError::NoNodes);
        }
        let mut node_ids = HashSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            n.validate(&format!("nodes[{i}]"))?;
            if !node_ids.insert(n.node_id.as_str()) {
                return Err(invalid(format!("nodes[{i}].node_id"), format!("duplicate `{}`", n.node_id)));
            }
        }
        let mut vm_ids = HashSet::new();
        let mut per_host: HashMap<&str, u32> = HashMap::new();
        for (i, v) in self.vms.iter().enumerate() {
            v.validate(&format!("vms[{i}]"))?;
            if !vm_ids.insert(v.vm_id.as_str()) {
                return Err(invalid(format!("vms[{i}].vm_id"), format!("duplicate `{}`", v.vm_id)));
            }
            if !node_ids.contains(v.host_id.as_str()) {
                return Err(invalid(format!("vms[{i}].host_id"), format!("unknown host `{}`", v.host_id)));
            }
            *per_host.entry(v.host_id.as_str()).or_default() += 1;
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let listed = per_host.get(n.node_id.as_str()).copied().unwrap_or(0);
            if listed > n.vm_count {
                return Err(invalid(
                    format!("nodes[{i}].vm_count"),
                    format!("{} is less than the {listed} VMs listed on this host", n.vm_count),
                ));
            }
        }
        Ok(())
    }

    pub fn vms_on<'a>(&'a self, host: &'a str) -> impl Iterator<Item = &'a VmSnapshot> + 'a {
        self.vms.iter().filter(move |v| v.host_id == host)
    }
}
