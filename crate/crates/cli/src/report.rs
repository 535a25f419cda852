//! Plain-text tables for stdout and small CSV writers for the rank, compare and bench outputs.

use std::fmt::Write as _;
use std::io::{self, Write};

use vmtopsis::controller::Pipeline;
use vmtopsis::simulator::{MetricsTrace, MigrationStatus, RunSummary, TimingRow};

pub fn node_table(nodes: &[(String, f64)], threshold: f64, degenerate: bool) -> String {
    let mut s = String::new();
    writeln!(s, "{:>4}  {:<12} {:>7}", "rank", "node", "score").unwrap();
    for (k, (id, score)) in nodes.iter().enumerate() {
        let mark = if *score > threshold { "  hot" } else { "" };
        writeln!(s, "{:>4}  {:<12} {:>7.2}{mark}", k + 1, id, score).unwrap();
    }
    if degenerate {
        writeln!(s, "(all nodes indistinguishable; scores set to the midpoint)").unwrap();
    }
    s
}

pub fn vm_table(host: &str, scores: &[(String, f64)], pipeline: Pipeline) -> String {
    let key = match pipeline {
        Pipeline::SandpiperBaseline => "VSR",
        _ => "score",
    };
    let mut s = String::new();
    writeln!(s, "VMs on {host}").unwrap();
    writeln!(s, "{:>4}  {:<12} {:>9}", "rank", "vm", key).unwrap();
    for (k, (id, v)) in scores.iter().enumerate() {
        writeln!(s, "{:>4}  {:<12} {:>9.2}", k + 1, id, v).unwrap();
    }
    s
}

pub fn event_table(trace: &MetricsTrace) -> String {
    let mut s = String::new();
    if trace.events.is_empty() {
        writeln!(s, "no migrations").unwrap();
        return s;
    }
    writeln!(
        s,
        "{:>9}  {:<8} {:<8} {:<8} {:>7} {:>9} {:>9}  status",
        "trigger", "vm", "from", "to", "GB", "start", "end"
    )
    .unwrap();
    for e in &trace.events {
        let status = match &e.status {
            MigrationStatus::Completed => "completed".to_string(),
            MigrationStatus::Aborted(r) => format!("aborted: {r}"),
        };
        writeln!(
            s,
            "{:>9.1}  {:<8} {:<8} {:<8} {:>7.3} {:>9.1} {:>9.1}  {status}",
            e.decision.trigger_time,
            e.decision.vm_id,
            e.decision.source_node,
            e.decision.destination_node,
            e.decision.transferred_gb,
            e.start,
            e.end
        )
        .unwrap();
    }
    s
}

pub fn compare_table(rows: &[RunSummary]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<10} {:>10} {:>9} {:>9} {:>9} {:>12} {:>10} {:>9}",
        "planner", "migrations", "GB moved", "peak UF", "mean UF", "mean resp ms", "dwell s", "residual"
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "{:<10} {:>10} {:>9.3} {:>9.4} {:>9.4} {:>12.2} {:>10.0} {:>9}",
            r.planner.to_string(),
            r.migrations,
            r.gb_moved,
            r.peak_unbalance,
            r.mean_unbalance,
            r.mean_response_ms,
            r.hotspot_dwell_s,
            r.residual_cycles
        )
        .unwrap();
    }
    s
}

pub fn bench_table(rows: &[TimingRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{:>6} {:>7} {:>5} {:>12}", "nodes", "VMs", "reps", "median ms").unwrap();
    for r in rows {
        writeln!(s, "{:>6} {:>7} {:>5} {:>12.3}", r.nodes, r.vms, r.repetitions, r.median_ns as f64 / 1e6)
            .unwrap();
    }
    s
}

pub fn write_node_csv(mut w: impl Write, nodes: &[(String, f64)]) -> io::Result<()> {
    writeln!(w, "rank,node,score")?;
    for (k, (id, score)) in nodes.iter().enumerate() {
        writeln!(w, "{},{id},{score:.6}", k + 1)?;
    }
    Ok(())
}

pub fn write_vm_csv(
    mut w: impl Write,
    host: &str,
    scores: &[(String, f64)],
    destination: Option<&str>,
) -> io::Result<()> {
    writeln!(w, "rank,vm,host,key,chosen,destination")?;
    for (k, (id, v)) in scores.iter().enumerate() {
        let (chosen, dst) = if k == 0 { ("true", destination.unwrap_or("")) } else { ("false", "") };
        writeln!(w, "{},{id},{host},{v:.6},{chosen},{dst}", k + 1)?;
    }
    Ok(())
}

pub fn write_compare_csv(mut w: impl Write, rows: &[RunSummary]) -> io::Result<()> {
    writeln!(
        w,
        "planner,migrations,gb_moved,peak_unbalance_factor,mean_unbalance_factor,mean_response_ms,hotspot_dwell_s,residual_cycles"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.planner,
            r.migrations,
            r.gb_moved,
            r.peak_unbalance,
            r.mean_unbalance,
            r.mean_response_ms,
            r.hotspot_dwell_s,
            r.residual_cycles
        )?;
    }
    Ok(())
}

pub fn write_bench_csv(mut w: impl Write, rows: &[TimingRow]) -> io::Result<()> {
    writeln!(w, "nodes,vms,repetitions,median_ns")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.nodes, r.vms, r.repetitions, r.median_ns)?;
    }
    Ok(())
}
