//! Two-level migration controller: rank nodes, flag hotspots, pick a victim VM on the hottest
//! node and walk destinations from the least loaded upward.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    node_decision_matrix_with, sandpiper_volume, vm_decision_matrix, volume_score, vsr, ClusterError,
    NodeSnapshot, VmCountScale, VmSnapshot,
};
use crate::topsis::{rank_crisp, rank_fuzzy, RankingResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("invalid controller config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("VM `{vm}` refers to unknown host `{host}`")]
    UnknownHost { vm: String, host: String },
    #[error("host `{0}` runs no VMs")]
    NoVms(String),
}

impl From<crate::topsis::TopsisError> for ControlError {
    fn from(e: crate::topsis::TopsisError) -> Self {
        ControlError::Cluster(e.into())
    }
}

/// Ranking procedure used for both decision levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Fuzzy,
    Crisp,
    /// Volume ordering of nodes and volume-to-size ordering of VMs.
    #[serde(rename = "sandpiper")]
    SandpiperBaseline,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Fuzzy => "fuzzy",
            Pipeline::Crisp => "crisp",
            Pipeline::SandpiperBaseline => "sandpiper",
        })
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fuzzy" => Ok(Pipeline::Fuzzy),
            "crisp" => Ok(Pipeline::Crisp),
            "sandpiper" | "sandpiperbaseline" | "volume" => Ok(Pipeline::SandpiperBaseline),
            other => Err(format!("unknown pipeline `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Hotspot threshold on the 0–100 score scale.
    pub threshold: f64,
    /// Seconds between planner invocations.
    pub control_interval: f64,
    pub pipeline: Pipeline,
    pub vm_count_scale: VmCountScale,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            threshold: 75.0,
            control_interval: 180.0,
            pipeline: Pipeline::Fuzzy,
            vm_count_scale: VmCountScale::default(),
        }
    }
}

impl ControllerConfig {
    pub fn with_pipeline(&self, pipeline: Pipeline) -> Self {
        Self { pipeline, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        // 100 is accepted: no score can exceed it, which disables planning.
        if !(self.threshold > 0.0 && self.threshold <= 100.0) {
            return Err(ControlError::InvalidConfig {
                field: "threshold",
                reason: format!("{} outside (0, 100]", self.threshold),
            });
        }
        if !(self.control_interval.is_finite() && self.control_interval > 0.0) {
            return Err(ControlError::InvalidConfig {
                field: "control_interval",
                reason: format!("{} must be positive", self.control_interval),
            });
        }
        let edges = &self.vm_count_scale.edges;
        if edges.windows(2).any(|w| w[0] > w[1]) || edges.iter().any(|e| !e.is_finite()) {
            return Err(ControlError::InvalidConfig {
                field: "vm_count_scale",
                reason: "edges must be finite and non-decreasing".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationDecision {
    pub vm_id: String,
    pub source_node: String,
    pub destination_node: String,
    /// Source score on the 0–100 scale when the decision was taken.
    pub source_score_before: f64,
    pub trigger_time: f64,
    /// Memory footprint copied by the migration.
    pub transferred_gb: f64,
}

/// Decisions of one planner invocation plus the hotspots it could not clear.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub decisions: Vec<MigrationDecision>,
    pub residual: Vec<String>,
    /// Working copies with every decision applied.
    pub nodes_after: Vec<NodeSnapshot>,
    pub vms_after: Vec<VmSnapshot>,
}

impl PlanOutcome {
    pub fn is_mitigated(&self) -> bool {
        self.residual.is_empty()
    }
}

pub fn percent(score: f64) -> f64 {
    100.0 * score
}

fn volume_ranking(nodes: &[NodeSnapshot]) -> RankingResult<f64> {
    let scores = nodes
        .iter()
        .map(|n| match sandpiper_volume(n.cpu_util, n.net_util, n.ram_util) {
            Ok(v) => volume_score(v),
            // saturated on some resource
            Err(_) => 1.0,
        })
        .collect();
    RankingResult::from_scores(nodes.iter().map(|n| n.node_id.clone()).collect(), scores, false)
}

/// Level-one ranking of nodes; scores lie in `[0, 1]` and [`percent`] maps them to 0–100.
pub fn rank_nodes(
    nodes: &[NodeSnapshot],
    config: &ControllerConfig,
) -> Result<RankingResult<f64>, ControlError> {
    if nodes.is_empty() {
        return Err(ClusterError::NoNodes.into());
    }
    match config.pipeline {
        Pipeline::Fuzzy => Ok(rank_fuzzy(&node_decision_matrix_with(nodes, &config.vm_count_scale)?)?),
        Pipeline::Crisp => Ok(rank_crisp(&node_decision_matrix_with(nodes, &config.vm_count_scale)?)?),
        Pipeline::SandpiperBaseline => Ok(volume_ranking(nodes)),
    }
}

/// Nodes scoring above the threshold, hottest first.
pub fn detect_hotspots(ranking: &RankingResult<f64>, config: &ControllerConfig) -> Vec<String> {
    ranking.ranked().filter(|(_, s)| percent(*s) > config.threshold).map(|(id, _)| id.to_string()).collect()
}

/// Level-two order of a host's VMs, best migration candidate first.
pub fn rank_victims(vms: &[VmSnapshot], config: &ControllerConfig) -> Result<Vec<String>, ControlError> {
    Ok(victim_scores(vms, config)?.into_iter().map(|(id, _)| id).collect())
}

/// Level-two ranking with each VM's key: closeness on 0–100 for the TOPSIS pipelines, VSR for
/// the volume baseline (infinite when a resource is saturated).
pub fn victim_scores(
    vms: &[VmSnapshot],
    config: &ControllerConfig,
) -> Result<Vec<(String, f64)>, ControlError> {
    if vms.is_empty() {
        return Err(ClusterError::NoVms.into());
    }
    let ranking = match config.pipeline {
        Pipeline::Fuzzy => rank_fuzzy(&vm_decision_matrix(vms)?)?,
        Pipeline::Crisp => rank_crisp(&vm_decision_matrix(vms)?)?,
        Pipeline::SandpiperBaseline => {
            let keys: Vec<f64> = vms
                .iter()
                .map(|v| {
                    let volume =
                        sandpiper_volume(v.cpu_util, v.net_util, v.ram_util).unwrap_or(f64::INFINITY);
                    vsr(volume, v.ram_usage_gb).unwrap_or(f64::INFINITY)
                })
                .collect();
            let mut order: Vec<usize> = (0..vms.len()).collect();
            order.sort_by(|&a, &b| keys[b].partial_cmp(&keys[a]).unwrap_or(std::cmp::Ordering::Equal));
            return Ok(order.into_iter().map(|i| (vms[i].vm_id.clone(), keys[i])).collect());
        }
    };
    Ok(ranking.ranked().map(|(id, s)| (id.to_string(), percent(s))).collect())
}

/// Top-ranked VM of `host`.
pub fn select_victim(
    host: &str,
    vms: &[VmSnapshot],
    config: &ControllerConfig,
) -> Result<String, ControlError> {
    let hosted: Vec<VmSnapshot> = vms.iter().filter(|v| v.host_id == host).cloned().collect();
    if hosted.is_empty() {
        return Err(ControlError::NoVms(host.to_string()));
    }
    Ok(rank_victims(&hosted, config)?.swap_remove(0))
}

/// Applies a VM move to node and VM copies: demands follow the VM, rescaled by clock, bandwidth
/// and capacity ratios, and the footprint leaves the source's free RAM for the destination's.
pub fn project_move(nodes: &mut [NodeSnapshot], vm: &mut VmSnapshot, destination: &str) {
    let src = nodes.iter().position(|n| n.node_id == vm.host_id).expect("source node exists");
    let dst = nodes.iter().position(|n| n.node_id == destination).expect("destination node exists");
    let (s, d) = (nodes[src].clone(), nodes[dst].clone());
    let cpu = vm.cpu_util * s.cpu_clock_ghz / d.cpu_clock_ghz;
    let net = vm.net_util * s.net_bw_mbps / d.net_bw_mbps;
    let ram = vm.ram_util * s.ram_capacity_gb / d.ram_capacity_gb;

    let source = &mut nodes[src];
    source.cpu_util = (source.cpu_util - vm.cpu_util).clamp(0.0, 1.0);
    source.net_util = (source.net_util - vm.net_util).clamp(0.0, 1.0);
    source.ram_util = (source.ram_util - vm.ram_util).clamp(0.0, 1.0);
    source.ram_free_gb = (source.ram_free_gb + vm.ram_usage_gb).min(source.ram_capacity_gb);
    source.vm_count = source.vm_count.saturating_sub(1);

    let dest = &mut nodes[dst];
    dest.cpu_util = (dest.cpu_util + cpu).clamp(0.0, 1.0);
    dest.net_util = (dest.net_util + net).clamp(0.0, 1.0);
    dest.ram_util = (dest.ram_util + ram).clamp(0.0, 1.0);
    dest.ram_free_gb = (dest.ram_free_gb - vm.ram_usage_gb).max(0.0);
    dest.vm_count += 1;

    vm.cpu_util = cpu.min(1.0);
    vm.net_util = net.min(1.0);
    vm.ram_util = ram.min(1.0);
    vm.host_id = destination.to_string();
}

/// Least-loaded node, excluding the VM's host, that has room for the footprint and stays at or
/// below the threshold once the move is projected through a full re-ranking.
pub fn select_destination(
    ranking: &RankingResult<f64>,
    vm: &VmSnapshot,
    nodes: &[NodeSnapshot],
    config: &ControllerConfig,
) -> Result<Option<String>, ControlError> {
    select_destination_excluding(ranking, vm, nodes, config, &HashSet::new())
}

fn select_destination_excluding(
    ranking: &RankingResult<f64>,
    vm: &VmSnapshot,
    nodes: &[NodeSnapshot],
    config: &ControllerConfig,
    excluded: &HashSet<String>,
) -> Result<Option<String>, ControlError> {
    for &idx in ranking.order.iter().rev() {
        let candidate = &ranking.alternatives[idx];
        if *candidate == vm.host_id || excluded.contains(candidate) {
            continue;
        }
        let Some(node) = nodes.iter().find(|n| n.node_id == *candidate) else {
            continue;
        };
        if node.ram_free_gb < vm.ram_usage_gb {
            continue;
        }
        let mut projected = nodes.to_vec();
        let mut moved = vm.clone();
        project_move(&mut projected, &mut moved, candidate);
        let after = rank_nodes(&projected, config)?;
        let score = after.score_of(candidate).expect("candidate ranked");
        if percent(score) <= config.threshold {
            return Ok(Some(candidate.clone()));
        }
    }
    Ok(None)
}

/// Plans migrations with the pipeline in `config` until no hotspot remains or no move fits.
pub fn mitigation_plan(
    nodes: &[NodeSnapshot],
    vms: &[VmSnapshot],
    config: &ControllerConfig,
) -> Result<PlanOutcome, ControlError> {
    plan_at(nodes, vms, config, 0.0)
}

/// The volume baseline: same loop, volume ordering of nodes and VSR ordering of VMs.
pub fn sandpiper_plan(
    nodes: &[NodeSnapshot],
    vms: &[VmSnapshot],
    config: &ControllerConfig,
) -> Result<PlanOutcome, ControlError> {
    plan_at(nodes, vms, &config.with_pipeline(Pipeline::SandpiperBaseline), 0.0)
}

/// Planner loop stamped with the trigger time `now`.
///
/// Each node serves as source or destination at most once per invocation, and every iteration
/// either records one move or stops, so the loop runs at most `vms.len()` times.
pub fn plan_at(
    nodes: &[NodeSnapshot],
    vms: &[VmSnapshot],
    config: &ControllerConfig,
    now: f64,
) -> Result<PlanOutcome, ControlError> {
    config.validate()?;
    if nodes.is_empty() {
        return Err(ClusterError::NoNodes.into());
    }
    for v in vms {
        if !nodes.iter().any(|n| n.node_id == v.host_id) {
            return Err(ControlError::UnknownHost { vm: v.vm_id.clone(), host: v.host_id.clone() });
        }
    }
    let mut work_nodes = nodes.to_vec();
    let mut work_vms = vms.to_vec();
    let mut decisions = Vec::new();
    let mut busy: HashSet<String> = HashSet::new();
    let mut exhausted: HashSet<String> = HashSet::new();

    for _ in 0..vms.len() {
        let ranking = rank_nodes(&work_nodes, config)?;
        let hot = detect_hotspots(&ranking, config);
        if hot.is_empty() {
            break;
        }
        let mut moved = None;
        for host in &hot {
            if busy.contains(host) || exhausted.contains(host) {
                continue;
            }
            let hosted: Vec<VmSnapshot> = work_vms.iter().filter(|v| v.host_id == *host).cloned().collect();
            if hosted.is_empty() {
                exhausted.insert(host.clone());
                continue;
            }
            for victim_id in rank_victims(&hosted, config)? {
                let victim = hosted.iter().find(|v| v.vm_id == victim_id).expect("ranked VM");
                if let Some(dst) = select_destination_excluding(&ranking, victim, &work_nodes, config, &busy)?
                {
                    let score = ranking.score_of(host).expect("host ranked");
                    moved = Some((victim_id, host.clone(), dst, percent(score), victim.ram_usage_gb));
                    break;
                }
            }
            if moved.is_some() {
                break;
            }
            exhausted.insert(host.clone());
        }
        let Some((vm_id, source, destination, source_score_before, transferred_gb)) = moved else {
            break;
        };
        let vm = work_vms.iter_mut().find(|v| v.vm_id == vm_id).expect("victim exists");
        project_move(&mut work_nodes, vm, &destination);
        busy.insert(source.clone());
        busy.insert(destination.clone());
        decisions.push(MigrationDecision {
            vm_id,
            source_node: source,
            destination_node: destination,
            source_score_before,
            trigger_time: now,
            transferred_gb,
        });
    }

    let residual = detect_hotspots(&rank_nodes(&work_nodes, config)?, config);
    Ok(PlanOutcome { decisions, residual, nodes_after: work_nodes, vms_after: work_vms })
}
