//! Deterministic discrete-time cluster simulator.
//!
//! VMs follow workload profiles (constant baseline plus an optional triangular peak), nodes
//! aggregate their guests' demands, and a planner runs every control interval. Migrations copy
//! the VM's memory footprint at a fixed bandwidth; while copying, the transfer occupies network
//! bandwidth on both ends and the VM keeps running on its source.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterSnapshot, NodeSnapshot, VmCountScale, VmSnapshot};
use crate::controller::{
    percent, plan_at, rank_nodes, select_destination, select_victim, ControlError, ControllerConfig,
    MigrationDecision, Pipeline,
};
use crate::fuzzy::{LinguisticRank, TriangularFuzzyNumber};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("failed to parse scenario: {0}")]
    Parse(String),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("I/O error on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Control(#[from] ControlError),
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::Invalid { path: path.into(), reason: reason.into() }
}

fn io_err(path: &Path, e: impl fmt::Display) -> SimError {
    SimError::Io { path: path.display().to_string(), reason: e.to_string() }
}

/// Planner driving a simulation run; `None` disables balancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Fuzzy,
    Crisp,
    Sandpiper,
    None,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] =
        [PlannerKind::Fuzzy, PlannerKind::Crisp, PlannerKind::Sandpiper, PlannerKind::None];

    pub fn pipeline(self) -> Option<Pipeline> {
        match self {
            PlannerKind::Fuzzy => Some(Pipeline::Fuzzy),
            PlannerKind::Crisp => Some(Pipeline::Crisp),
            PlannerKind::Sandpiper => Some(Pipeline::SandpiperBaseline),
            PlannerKind::None => None,
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::Fuzzy => "fuzzy",
            PlannerKind::Crisp => "crisp",
            PlannerKind::Sandpiper => "sandpiper",
            PlannerKind::None => "none",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fuzzy" => Ok(PlannerKind::Fuzzy),
            "crisp" => Ok(PlannerKind::Crisp),
            "sandpiper" | "volume" => Ok(PlannerKind::Sandpiper),
            "none" | "off" => Ok(PlannerKind::None),
            other => Err(format!("unknown planner `{other}` (expected fuzzy, crisp, sandpiper or none)")),
        }
    }
}

/// Per-resource demand fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    /// CPU in units of the reference clock.
    #[serde(default)]
    pub cpu: f64,
    /// Fraction of the VM's footprint actively used.
    #[serde(default)]
    pub ram: f64,
    /// Network in units of the reference bandwidth.
    #[serde(default)]
    pub net: f64,
}

impl Demand {
    fn components(&self) -> [(&'static str, f64); 3] {
        [("cpu", self.cpu), ("ram", self.ram), ("net", self.net)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Peak {
    /// Apex time in seconds.
    pub time: f64,
    /// Full width of the triangular bump in seconds.
    #[serde(default = "default_peak_width")]
    pub width: f64,
    pub magnitude: Demand,
}

fn default_peak_width() -> f64 {
    120.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub baseline: Demand,
    pub peak: Option<Peak>,
}

/// Baseline plus a triangular bump of height `magnitude` at the peak time.
pub fn demand_at(profile: &WorkloadProfile, t: f64) -> Demand {
    let base = profile.baseline;
    let Some(peak) = profile.peak else {
        return base;
    };
    let half = peak.width / 2.0;
    let h = (1.0 - (t - peak.time).abs() / half).max(0.0);
    Demand {
        cpu: base.cpu + h * peak.magnitude.cpu,
        ram: base.ram + h * peak.magnitude.ram,
        net: base.net + h * peak.magnitude.net,
    }
}

/// Coefficient of variation of node scores; zero for a perfectly balanced or idle cluster.
pub fn unbalance_factor(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 0.0;
    }
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Synthetic response time: `base_ms / max(floor, 1 - cpu_util)`.
pub fn response_time_proxy(cpu_util: f64, base_ms: f64, floor: f64) -> f64 {
    base_ms / floor.max(1.0 - cpu_util)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub tick: f64,
    pub duration: f64,
    pub control_interval: f64,
    pub migration_bandwidth_gbps: f64,
    pub seed: u64,
    pub planner: PlannerKind,
    /// Half-width of uniform demand jitter drawn from the seeded generator.
    pub noise: f64,
    pub response_base_ms: f64,
    pub response_floor: f64,
    /// Clock that one unit of CPU demand corresponds to.
    pub cpu_reference_ghz: f64,
    /// Bandwidth that one unit of network demand corresponds to.
    pub net_reference_mbps: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick: 1.0,
            duration: 600.0,
            control_interval: 180.0,
            migration_bandwidth_gbps: 1.0,
            seed: 0,
            planner: PlannerKind::Fuzzy,
            noise: 0.0,
            response_base_ms: 20.0,
            response_floor: 0.02,
            cpu_reference_ghz: 2.0,
            net_reference_mbps: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub threshold: f64,
    pub vm_count_scale: VmCountScale,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self { threshold: c.threshold, vm_count_scale: c.vm_count_scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub cpu_clock_ghz: f64,
    pub ram_gb: f64,
    pub net_bw_mbps: f64,
    pub vm_slots: u32,
    /// Temperature of an idle host on the 0–100 membership axis.
    #[serde(default = "default_idle_temp")]
    pub idle_temp: f64,
    /// Temperature at full CPU load.
    #[serde(default = "default_full_temp")]
    pub full_temp: f64,
    /// Half-spread of the temperature reading.
    #[serde(default = "default_temp_spread")]
    pub temp_spread: f64,
}

fn default_idle_temp() -> f64 {
    30.0
}

fn default_full_temp() -> f64 {
    80.0
}

fn default_temp_spread() -> f64 {
    5.0
}

impl NodeSpec {
    fn temperature(&self, cpu_util: f64) -> TriangularFuzzyNumber<f64> {
        let m = self.idle_temp + (self.full_temp - self.idle_temp) * cpu_util;
        let lo = (m - self.temp_spread).max(0.0);
        TriangularFuzzyNumber::new(lo, m.max(lo), m.max(lo) + self.temp_spread).expect("ordered temperature")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmSpec {
    pub id: String,
    pub host: String,
    pub ram_mb: f64,
    pub qos: LinguisticRank,
    pub baseline: Demand,
    #[serde(default)]
    pub peak: Option<Peak>,
}

impl VmSpec {
    pub fn profile(&self) -> WorkloadProfile {
        WorkloadProfile { baseline: self.baseline, peak: self.peak }
    }

    pub fn footprint_gb(&self) -> f64 {
        self.ram_mb / 1024.0
    }
}

/// A simulation input: nodes, VMs with workload profiles, controller and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub sim: SimConfig,
    pub nodes: Vec<NodeSpec>,
    pub vms: Vec<VmSpec>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let scenario: Self = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn controller_config(&self, pipeline: Pipeline) -> ControllerConfig {
        ControllerConfig {
            threshold: self.controller.threshold,
            control_interval: self.sim.control_interval,
            pipeline,
            vm_count_scale: self.controller.vm_count_scale,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let s = &self.sim;
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(path, format!("{v} must be positive")))
            }
        };
        positive("sim.tick", s.tick)?;
        positive("sim.control_interval", s.control_interval)?;
        positive("sim.migration_bandwidth_gbps", s.migration_bandwidth_gbps)?;
        positive("sim.response_base_ms", s.response_base_ms)?;
        positive("sim.cpu_reference_ghz", s.cpu_reference_ghz)?;
        positive("sim.net_reference_mbps", s.net_reference_mbps)?;
        if s.tick > s.control_interval {
            return Err(invalid("sim.tick", "must not exceed sim.control_interval"));
        }
        let ratio = s.control_interval / s.tick;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(invalid("sim.control_interval", "must be a whole number of ticks"));
        }
        if !(s.duration.is_finite() && s.duration >= 0.0) {
            return Err(invalid("sim.duration", format!("{} must be nonnegative", s.duration)));
        }
        if !(0.0..0.5).contains(&s.noise) {
            return Err(invalid("sim.noise", format!("{} outside [0, 0.5)", s.noise)));
        }
        if !(s.response_floor > 0.0 && s.response_floor <= 1.0) {
            return Err(invalid("sim.response_floor", format!("{} outside (0, 1]", s.response_floor)));
        }
        self.controller_config(Pipeline::Fuzzy)
            .validate()
            .map_err(|e| invalid("controller", e.to_string()))?;

        if self.nodes.is_empty() {
            return Err(invalid("nodes", "at least one node is required"));
        }
        let mut node_ids = HashSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let p = format!("nodes[{i}]");
            if n.id.is_empty() || !node_ids.insert(n.id.as_str()) {
                return Err(invalid(format!("{p}.id"), format!("empty or duplicate id `{}`", n.id)));
            }
            positive(&format!("{p}.cpu_clock_ghz"), n.cpu_clock_ghz)?;
            positive(&format!("{p}.ram_gb"), n.ram_gb)?;
            positive(&format!("{p}.net_bw_mbps"), n.net_bw_mbps)?;
            if n.vm_slots == 0 {
                return Err(invalid(format!("{p}.vm_slots"), "must be at least 1"));
            }
            if !(n.idle_temp >= 0.0 && n.full_temp >= n.idle_temp && n.temp_spread >= 0.0) {
                return Err(invalid(
                    format!("{p}.idle_temp"),
                    "require 0 <= idle_temp <= full_temp and temp_spread >= 0",
                ));
            }
        }
        let mut vm_ids = HashSet::new();
        let mut hosted: HashMap<&str, f64> = HashMap::new();
        for (i, v) in self.vms.iter().enumerate() {
            let p = format!("vms[{i}]");
            if v.id.is_empty() || !vm_ids.insert(v.id.as_str()) {
                return Err(invalid(format!("{p}.id"), format!("empty or duplicate id `{}`", v.id)));
            }
            if !node_ids.contains(v.host.as_str()) {
                return Err(invalid(format!("{p}.host"), format!("unknown host `{}`", v.host)));
            }
            if !(v.ram_mb.is_finite() && v.ram_mb >= 0.0) {
                return Err(invalid(format!("{p}.ram_mb"), "must be a nonnegative size"));
            }
            for (name, x) in v.baseline.components() {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(invalid(format!("{p}.baseline.{name}"), format!("{x} must be nonnegative")));
                }
            }
            if let Some(peak) = &v.peak {
                if !(peak.width.is_finite() && peak.width > 0.0) {
                    return Err(invalid(format!("{p}.peak.width"), "must be positive"));
                }
                if !(peak.time.is_finite() && peak.time >= 0.0) {
                    return Err(invalid(format!("{p}.peak.time"), "must be nonnegative"));
                }
                for ((name, b), (_, m)) in
                    v.baseline.components().into_iter().zip(peak.magnitude.components())
                {
                    if !(m.is_finite() && m >= 0.0) {
                        return Err(invalid(format!("{p}.peak.magnitude.{name}"), "must be nonnegative"));
                    }
                    if b + m > 1.5 {
                        return Err(invalid(
                            format!("{p}.peak.magnitude.{name}"),
                            format!("baseline + magnitude = {} exceeds 1.5", b + m),
                        ));
                    }
                }
            }
            *hosted.entry(v.host.as_str()).or_default() += v.footprint_gb();
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let used = hosted.get(n.id.as_str()).copied().unwrap_or(0.0);
            if used > n.ram_gb + 1e-12 {
                return Err(invalid(
                    format!("nodes[{i}].ram_gb"),
                    format!("{used} GB of VM memory exceeds capacity {}", n.ram_gb),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeSample {
    pub cpu: f64,
    pub ram: f64,
    pub net: f64,
    /// Fuzzy TOPSIS score on 0–100.
    pub score: f64,
    pub response_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub nodes: Vec<NodeSample>,
    pub unbalance_factor: f64,
    pub in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MigrationStatus {
    Completed,
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MigrationEvent {
    pub decision: MigrationDecision,
    pub start: f64,
    pub end: f64,
    pub status: MigrationStatus,
}

/// One planner invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub time: f64,
    pub decisions: usize,
    pub residual: Vec<String>,
    pub planner_ns: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTrace {
    pub planner: PlannerKind,
    pub threshold: f64,
    pub node_ids: Vec<String>,
    pub rows: Vec<TraceRow>,
    pub events: Vec<MigrationEvent>,
    pub cycles: Vec<CycleRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub planner: PlannerKind,
    pub migrations: usize,
    pub gb_moved: f64,
    pub peak_unbalance: f64,
    pub mean_unbalance: f64,
    pub mean_response_ms: f64,
    /// Seconds during which at least one node scored above the threshold.
    pub hotspot_dwell_s: f64,
    pub residual_cycles: usize,
    pub peak_scores: Vec<(String, f64)>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

impl MetricsTrace {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Score column of one node over time.
    pub fn scores_of(&self, id: &str) -> Vec<(f64, f64)> {
        let Some(k) = self.node_index(id) else {
            return Vec::new();
        };
        self.rows.iter().map(|r| (r.time, r.nodes[k].score)).collect()
    }

    pub fn completed_migrations(&self) -> impl Iterator<Item = &MigrationEvent> {
        self.events.iter().filter(|e| e.status == MigrationStatus::Completed)
    }

    pub fn summary(&self) -> RunSummary {
        let tick = if self.rows.len() > 1 { self.rows[1].time - self.rows[0].time } else { 0.0 };
        let n = self.rows.len().max(1) as f64;
        let completed: Vec<_> = self.completed_migrations().collect();
        let peak_scores = self
            .node_ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), self.rows.iter().map(|r| r.nodes[k].score).fold(0.0, f64::max)))
            .collect();
        let node_count = self.node_ids.len().max(1) as f64;
        RunSummary {
            planner: self.planner,
            migrations: completed.len(),
            gb_moved: completed.iter().fold(0.0, |acc, e| acc + e.decision.transferred_gb),
            peak_unbalance: self.rows.iter().map(|r| r.unbalance_factor).fold(0.0, f64::max),
            mean_unbalance: self.rows.iter().map(|r| r.unbalance_factor).sum::<f64>() / n,
            mean_response_ms: self
                .rows
                .iter()
                .map(|r| r.nodes.iter().map(|s| s.response_ms).sum::<f64>() / node_count)
                .sum::<f64>()
                / n,
            hotspot_dwell_s: self
                .rows
                .iter()
                .filter(|r| r.nodes.iter().any(|s| s.score > self.threshold))
                .count() as f64
                * tick,
            residual_cycles: self.cycles.iter().filter(|c| !c.residual.is_empty()).count(),
            peak_scores,
        }
    }

    pub fn has_residual_hotspots(&self) -> bool {
        self.cycles.iter().any(|c| !c.residual.is_empty())
    }

    /// One row per tick: time, then cpu/ram/net/score/response per node, then cluster columns.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv_writer(w);
        let mut header = vec!["time_s".to_string()];
        for id in &self.node_ids {
            for col in ["cpu", "ram", "net", "score", "response_ms"] {
                header.push(format!("{id}_{col}"));
            }
        }
        header.push("unbalance_factor".into());
        header.push("in_flight_migrations".into());
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![fmt_f(row.time)];
            for s in &row.nodes {
                rec.extend([fmt_f(s.cpu), fmt_f(s.ram), fmt_f(s.net), fmt_f(s.score), fmt_f(s.response_ms)]);
            }
            rec.push(fmt_f(row.unbalance_factor));
            rec.push(row.in_flight.to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "trigger_time_s",
            "vm",
            "source",
            "destination",
            "transferred_gb",
            "start_s",
            "end_s",
            "status",
        ])?;
        for e in &self.events {
            let status = match &e.status {
                MigrationStatus::Completed => "completed".to_string(),
                MigrationStatus::Aborted(reason) => format!("aborted: {reason}"),
            };
            out.write_record([
                fmt_f(e.decision.trigger_time),
                e.decision.vm_id.clone(),
                e.decision.source_node.clone(),
                e.decision.destination_node.clone(),
                fmt_f(e.decision.transferred_gb),
                fmt_f(e.start),
                fmt_f(e.end),
                status,
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Wall-clock of every planner invocation; the only non-deterministic output.
    pub fn write_timing_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["time_s", "decisions", "residual_hotspots", "planner_ns"])?;
        for c in &self.cycles {
            out.write_record([
                fmt_f(c.time),
                c.decisions.to_string(),
                c.residual.join(";"),
                c.planner_ns.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `trace.csv`, `events.csv`, `summary.csv` and `planner_timing.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let open = |name: &str| {
            let p = dir.join(name);
            std::fs::File::create(&p).map(std::io::BufWriter::new).map_err(|e| io_err(&p, e))
        };
        self.write_trace_csv(open("trace.csv")?).map_err(|e| io_err(&dir.join("trace.csv"), e))?;
        self.write_events_csv(open("events.csv")?).map_err(|e| io_err(&dir.join("events.csv"), e))?;
        self.summary().write_csv(open("summary.csv")?).map_err(|e| io_err(&dir.join("summary.csv"), e))?;
        self.write_timing_csv(open("planner_timing.csv")?)
            .map_err(|e| io_err(&dir.join("planner_timing.csv"), e))?;
        Ok(())
    }
}

impl RunSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["metric", "value"])?;
        let mut rows = vec![
            ("planner".to_string(), self.planner.to_string()),
            ("migrations".into(), self.migrations.to_string()),
            ("gb_moved".into(), fmt_f(self.gb_moved)),
            ("peak_unbalance_factor".into(), fmt_f(self.peak_unbalance)),
            ("mean_unbalance_factor".into(), fmt_f(self.mean_unbalance)),
            ("mean_response_ms".into(), fmt_f(self.mean_response_ms)),
            ("hotspot_dwell_s".into(), fmt_f(self.hotspot_dwell_s)),
            ("residual_cycles".into(), self.residual_cycles.to_string()),
        ];
        for (id, s) in &self.peak_scores {
            rows.push((format!("peak_score_{id}"), fmt_f(*s)));
        }
        for (k, v) in rows {
            out.write_record([k, v])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "planner               {}", self.planner)?;
        writeln!(f, "migrations            {}", self.migrations)?;
        writeln!(f, "GB moved              {:.3}", self.gb_moved)?;
        writeln!(f, "peak unbalance factor {:.4}", self.peak_unbalance)?;
        writeln!(f, "mean unbalance factor {:.4}", self.mean_unbalance)?;
        writeln!(f, "mean response (ms)    {:.2}", self.mean_response_ms)?;
        writeln!(f, "hotspot dwell (s)     {:.0}", self.hotspot_dwell_s)?;
        write!(f, "peak scores          ")?;
        for (id, s) in &self.peak_scores {
            write!(f, " {id}={s:.1}")?;
        }
        writeln!(f)
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    decision: MigrationDecision,
    start: f64,
    end: f64,
}

/// Mutable simulation state; advanced one tick at a time by [`Simulation::step`].
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    planner: PlannerKind,
    controller: Option<ControllerConfig>,
    reference: ControllerConfig,
    placement: Vec<usize>,
    tick_index: u64,
    ticks_per_interval: u64,
    last_tick: u64,
    rng: ChaCha8Rng,
    pending: Vec<(f64, MigrationDecision)>,
    in_flight: Vec<InFlight>,
    trace: MetricsTrace,
}

impl Simulation {
    pub fn new(scenario: Scenario, planner: PlannerKind) -> Result<Self, SimError> {
        scenario.validate()?;
        let placement = scenario
            .vms
            .iter()
            .map(|v| scenario.nodes.iter().position(|n| n.id == v.host).expect("validated host"))
            .collect();
        let ticks_per_interval = (scenario.sim.control_interval / scenario.sim.tick).round() as u64;
        let last_tick = (scenario.sim.duration / scenario.sim.tick + 1e-9).floor() as u64;
        let controller = planner.pipeline().map(|p| scenario.controller_config(p));
        let reference = scenario.controller_config(Pipeline::Fuzzy);
        let trace = MetricsTrace {
            planner,
            threshold: scenario.controller.threshold,
            node_ids: scenario.nodes.iter().map(|n| n.id.clone()).collect(),
            rows: Vec::new(),
            events: Vec::new(),
            cycles: Vec::new(),
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(scenario.sim.seed),
            scenario,
            planner,
            controller,
            reference,
            placement,
            tick_index: 0,
            ticks_per_interval,
            last_tick,
            pending: Vec::new(),
            in_flight: Vec::new(),
            trace,
        })
    }

    pub fn time(&self) -> f64 {
        self.tick_index as f64 * self.scenario.sim.tick
    }

    pub fn is_finished(&self) -> bool {
        self.tick_index > self.last_tick
    }

    pub fn trace(&self) -> &MetricsTrace {
        &self.trace
    }

    pub fn into_trace(self) -> MetricsTrace {
        self.trace
    }

    /// Current host of every VM, by id.
    pub fn placement(&self) -> Vec<(&str, &str)> {
        self.scenario
            .vms
            .iter()
            .zip(&self.placement)
            .map(|(v, &n)| (v.id.as_str(), self.scenario.nodes[n].id.as_str()))
            .collect()
    }

    fn node_index(&self, id: &str) -> Option<usize> {
        self.scenario.nodes.iter().position(|n| n.id == id)
    }

    fn vm_index(&self, id: &str) -> Option<usize> {
        self.scenario.vms.iter().position(|v| v.id == id)
    }

    /// GB of memory committed on each node: hosted footprints plus inbound reservations.
    fn committed_ram(&self) -> Vec<f64> {
        let mut used = vec![0.0; self.scenario.nodes.len()];
        for (v, &n) in self.scenario.vms.iter().zip(&self.placement) {
            used[n] += v.footprint_gb();
        }
        for f in &self.in_flight {
            if let Some(d) = self.node_index(&f.decision.destination_node) {
                used[d] += f.decision.transferred_gb;
            }
        }
        used
    }

    /// Starts a migration: validates it against the current state and either puts it in flight,
    /// completes it at once (zero footprint) or logs an abort.
    pub fn apply_migration(&mut self, decision: MigrationDecision, start: f64) {
        let duration = decision.transferred_gb * 8.0 / self.scenario.sim.migration_bandwidth_gbps;
        let abort = |reason: &str| MigrationEvent {
            decision: decision.clone(),
            start,
            end: start,
            status: MigrationStatus::Aborted(reason.to_string()),
        };
        let Some(dst) = self.node_index(&decision.destination_node) else {
            self.trace.events.push(abort("destination vanished"));
            return;
        };
        let Some(vm) = self.vm_index(&decision.vm_id) else {
            self.trace.events.push(abort("VM vanished"));
            return;
        };
        if self.scenario.nodes[self.placement[vm]].id != decision.source_node || self.placement[vm] == dst {
            self.trace.events.push(abort("VM no longer on source"));
            return;
        }
        if self.in_flight.iter().any(|f| f.decision.vm_id == decision.vm_id) {
            self.trace.events.push(abort("VM already migrating"));
            return;
        }
        let free = self.scenario.nodes[dst].ram_gb - self.committed_ram()[dst];
        if free + 1e-12 < self.scenario.vms[vm].footprint_gb() {
            self.trace.events.push(abort("destination RAM no longer free"));
            return;
        }
        if duration <= 0.0 {
            self.placement[vm] = dst;
            self.trace.events.push(MigrationEvent {
                decision,
                start,
                end: start,
                status: MigrationStatus::Completed,
            });
            return;
        }
        self.in_flight.push(InFlight { decision, start, end: start + duration });
    }

    fn complete_migrations(&mut self, now: f64) {
        let (done, rest): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.in_flight).into_iter().partition(|f| f.end <= now + 1e-9);
        self.in_flight = rest;
        for f in done {
            let vm = self.vm_index(&f.decision.vm_id).expect("in-flight VM exists");
            let dst = self.node_index(&f.decision.destination_node).expect("checked at start");
            self.placement[vm] = dst;
            self.trace.events.push(MigrationEvent {
                decision: f.decision,
                start: f.start,
                end: f.end,
                status: MigrationStatus::Completed,
            });
        }
    }

    fn vm_demands(&mut self, t: f64) -> Vec<Demand> {
        let noise = self.scenario.sim.noise;
        let mut out = Vec::with_capacity(self.scenario.vms.len());
        for v in &self.scenario.vms {
            let mut d = demand_at(&v.profile(), t);
            // draws happen even at zero noise so the stream only depends on the seed
            let jitter: [f64; 3] = [self.rng.gen(), self.rng.gen(), self.rng.gen()];
            if noise > 0.0 {
                d.cpu = (d.cpu + noise * (2.0 * jitter[0] - 1.0)).max(0.0);
                d.ram = (d.ram + noise * (2.0 * jitter[1] - 1.0)).max(0.0);
                d.net = (d.net + noise * (2.0 * jitter[2] - 1.0)).max(0.0);
            }
            out.push(d);
        }
        out
    }

    /// Node and VM snapshots for the given per-VM demands.
    fn snapshots(&self, demands: &[Demand]) -> ClusterSnapshot {
        let sim = &self.scenario.sim;
        let nodes_spec = &self.scenario.nodes;
        let mut cpu_ghz = vec![0.0; nodes_spec.len()];
        let mut net_mbps = vec![0.0; nodes_spec.len()];
        let mut ram_gb = vec![0.0; nodes_spec.len()];
        let mut count = vec![0u32; nodes_spec.len()];
        for ((v, d), &n) in self.scenario.vms.iter().zip(demands).zip(&self.placement) {
            cpu_ghz[n] += d.cpu * sim.cpu_reference_ghz;
            net_mbps[n] += d.net * sim.net_reference_mbps;
            ram_gb[n] += d.ram * v.footprint_gb();
            count[n] += 1;
        }
        let transfer_mbps = sim.migration_bandwidth_gbps * 1000.0;
        for f in &self.in_flight {
            for id in [&f.decision.source_node, &f.decision.destination_node] {
                if let Some(k) = self.node_index(id) {
                    net_mbps[k] += transfer_mbps;
                }
            }
        }
        let committed = self.committed_ram();
        let nodes = nodes_spec
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                let cpu = (cpu_ghz[k] / spec.cpu_clock_ghz).min(1.0);
                NodeSnapshot {
                    node_id: spec.id.clone(),
                    cpu_util: cpu,
                    ram_util: (ram_gb[k] / spec.ram_gb).min(1.0),
                    net_util: (net_mbps[k] / spec.net_bw_mbps).min(1.0),
                    vm_count: count[k],
                    vm_slots: spec.vm_slots,
                    cpu_clock_ghz: spec.cpu_clock_ghz,
                    net_bw_mbps: spec.net_bw_mbps,
                    temperature: spec.temperature(cpu),
                    ram_capacity_gb: spec.ram_gb,
                    ram_free_gb: (spec.ram_gb - committed[k]).max(0.0),
                }
            })
            .collect();
        let vms = self
            .scenario
            .vms
            .iter()
            .zip(demands)
            .zip(&self.placement)
            .map(|((v, d), &n)| {
                let host = &nodes_spec[n];
                VmSnapshot {
                    vm_id: v.id.clone(),
                    host_id: host.id.clone(),
                    cpu_util: (d.cpu * sim.cpu_reference_ghz / host.cpu_clock_ghz).min(1.0),
                    ram_util: (d.ram * v.footprint_gb() / host.ram_gb).min(1.0),
                    net_util: (d.net * sim.net_reference_mbps / host.net_bw_mbps).min(1.0),
                    ram_usage_gb: v.footprint_gb(),
                    qos: v.qos,
                }
            })
            .collect();
        ClusterSnapshot { nodes, vms }
    }

    /// Snapshot of the cluster at the current time without advancing it.
    pub fn snapshot(&self) -> ClusterSnapshot {
        let t = self.time();
        let demands: Vec<Demand> = self.scenario.vms.iter().map(|v| demand_at(&v.profile(), t)).collect();
        self.snapshots(&demands)
    }

    /// Advances one tick: finishes and starts migrations, records a trace row and, on a control
    /// boundary, runs the planner. Its decisions start on the next tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.time();
        self.complete_migrations(t);
        let (due, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.pending).into_iter().partition(|(s, _)| *s <= t + 1e-9);
        self.pending = later;
        for (start, decision) in due {
            self.apply_migration(decision, start);
        }

        let demands = self.vm_demands(t);
        let snap = self.snapshots(&demands);
        let ranking = rank_nodes(&snap.nodes, &self.reference)?;
        let sim = &self.scenario.sim;
        let samples: Vec<NodeSample> = snap
            .nodes
            .iter()
            .zip(&ranking.scores)
            .map(|(n, s)| NodeSample {
                cpu: n.cpu_util,
                ram: n.ram_util,
                net: n.net_util,
                score: percent(*s),
                response_ms: response_time_proxy(n.cpu_util, sim.response_base_ms, sim.response_floor),
            })
            .collect();
        let scores: Vec<f64> = samples.iter().map(|s| s.score).collect();
        self.trace.rows.push(TraceRow {
            time: t,
            nodes: samples,
            unbalance_factor: unbalance_factor(&scores),
            in_flight: self.in_flight.len(),
        });

        if let Some(config) = &self.controller {
            if self.tick_index.is_multiple_of(self.ticks_per_interval) {
                let started = Instant::now();
                let outcome = plan_at(&snap.nodes, &snap.vms, config, t)?;
                let planner_ns = started.elapsed().as_nanos();
                let busy: HashSet<&str> = self
                    .in_flight
                    .iter()
                    .flat_map(|f| {
                        [
                            f.decision.vm_id.as_str(),
                            f.decision.source_node.as_str(),
                            f.decision.destination_node.as_str(),
                        ]
                    })
                    .collect();
                let accepted: Vec<MigrationDecision> = outcome
                    .decisions
                    .into_iter()
                    .filter(|d| {
                        !busy.contains(d.vm_id.as_str())
                            && !busy.contains(d.source_node.as_str())
                            && !busy.contains(d.destination_node.as_str())
                    })
                    .collect();
                self.trace.cycles.push(CycleRecord {
                    time: t,
                    decisions: accepted.len(),
                    residual: outcome.residual,
                    planner_ns,
                });
                let start = t + self.scenario.sim.tick;
                self.pending.extend(accepted.into_iter().map(|d| (start, d)));
            }
        }
        self.tick_index += 1;
        Ok(())
    }

    pub fn planner(&self) -> PlannerKind {
        self.planner
    }
}

/// Runs a scenario from t = 0 through its duration with the given planner.
pub fn run(scenario: &Scenario, planner: PlannerKind) -> Result<MetricsTrace, SimError> {
    let mut sim = Simulation::new(scenario.clone(), planner)?;
    while !sim.is_finished() {
        sim.step()?;
    }
    Ok(sim.into_trace())
}

/// Cluster snapshot at time `t` of a run without balancing.
pub fn snapshot_at(scenario: &Scenario, t: f64) -> Result<ClusterSnapshot, SimError> {
    let mut sim = Simulation::new(scenario.clone(), PlannerKind::None)?;
    while sim.time() + 1e-9 < t {
        sim.step()?;
    }
    Ok(sim.snapshot())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub nodes: usize,
    pub vms: usize,
    pub repetitions: usize,
    pub median_ns: u128,
    /// Decision of the measured call; identical across repetitions.
    pub decision: Option<MigrationDecision>,
}

/// Random cluster of `n_nodes` hosts with `vms_per_node` guests each; node 0 is loaded heavily.
pub fn synthetic_cluster(n_nodes: usize, vms_per_node: usize, seed: u64) -> ClusterSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut vms = Vec::with_capacity(n_nodes * vms_per_node);
    for k in 0..n_nodes {
        let id = format!("node{k:04}");
        let cap = [4.0, 8.0, 16.0, 32.0][rng.gen_range(0..4)];
        let load = if k == 0 { 0.9 } else { rng.gen_range(0.05..0.7) };
        let size = 0.125 * f64::from(rng.gen_range(1u32..5));
        let mut cpu = 0.0;
        let mut ram = 0.0;
        let mut net = 0.0;
        for j in 0..vms_per_node {
            let share = load / vms_per_node as f64;
            let v = VmSnapshot {
                vm_id: format!("{id}-vm{j:04}"),
                host_id: id.clone(),
                cpu_util: share * rng.gen_range(0.5..1.5),
                ram_util: share * rng.gen_range(0.2..0.8),
                net_util: share * rng.gen_range(0.1..1.0),
                ram_usage_gb: size,
                qos: LinguisticRank::from_index(rng.gen_range(0..7)).expect("level"),
            };
            cpu += v.cpu_util;
            ram += v.ram_util;
            net += v.net_util;
            vms.push(v);
        }
        let cpu = cpu.min(1.0);
        let m = 30.0 + 50.0 * cpu;
        nodes.push(NodeSnapshot {
            node_id: id,
            cpu_util: cpu,
            ram_util: ram.min(1.0),
            net_util: net.min(1.0),
            vm_count: vms_per_node as u32,
            vm_slots: (vms_per_node as u32).max(1) * rng.gen_range(1u32..3),
            cpu_clock_ghz: [1.8, 2.4, 2.8, 3.2][rng.gen_range(0..4)],
            net_bw_mbps: [1000.0, 10000.0][rng.gen_range(0..2)],
            temperature: TriangularFuzzyNumber::new(m - 5.0, m, m + 5.0).expect("ordered"),
            ram_capacity_gb: cap,
            ram_free_gb: (cap - size * vms_per_node as f64).max(0.0),
        });
    }
    ClusterSnapshot { nodes, vms }
}

/// One full two-level decision: rank nodes, pick the top node's victim, find its destination.
pub fn two_level_decision(
    nodes: &[NodeSnapshot],
    vms: &[VmSnapshot],
    config: &ControllerConfig,
) -> Result<Option<MigrationDecision>, ControlError> {
    let ranking = rank_nodes(nodes, config)?;
    let host = ranking.top().expect("nonempty ranking").to_string();
    let hosted: Vec<VmSnapshot> = vms.iter().filter(|v| v.host_id == host).cloned().collect();
    if hosted.is_empty() {
        return Ok(None);
    }
    let victim_id = select_victim(&host, &hosted, config)?;
    let victim = hosted.iter().find(|v| v.vm_id == victim_id).expect("victim hosted");
    let dst = select_destination(&ranking, victim, nodes, config)?;
    Ok(dst.map(|destination_node| MigrationDecision {
        vm_id: victim_id.clone(),
        source_node: host.clone(),
        destination_node,
        source_score_before: percent(ranking.score_of(&host).expect("ranked")),
        trigger_time: 0.0,
        transferred_gb: victim.ram_usage_gb,
    }))
}

/// Median wall-clock of [`two_level_decision`] on a synthetic cluster.
pub fn planner_timing(
    n_nodes: usize,
    vms_per_node: usize,
    repetitions: usize,
    seed: u64,
    config: &ControllerConfig,
) -> Result<TimingRow, SimError> {
    if repetitions < 3 {
        return Err(invalid("repetitions", format!("{repetitions} is below the minimum of 3")));
    }
    if n_nodes == 0 || vms_per_node == 0 {
        return Err(invalid("size", "need at least one node and one VM per node"));
    }
    let snap = synthetic_cluster(n_nodes, vms_per_node, seed);
    let mut samples = Vec::with_capacity(repetitions);
    let mut decision = None;
    for _ in 0..repetitions {
        let started = Instant::now();
        let d = two_level_decision(&snap.nodes, &snap.vms, config)?;
        samples.push(started.elapsed().as_nanos());
        decision = d;
    }
    samples.sort_unstable();
    Ok(TimingRow {
        nodes: n_nodes,
        vms: n_nodes * vms_per_node,
        repetitions,
        median_ns: samples[samples.len() / 2],
        decision,
    })
}
