//! Calibrates the PM3 peak magnitudes of a scenario and checks the reference outcome.
//!
//! The scale factor applied to every PM3 peak magnitude is bisected, under planner `none`, down
//! to the smallest value at which PM3 exceeds the threshold at t = 450 s. The report then shows
//! the margin of the shipped magnitudes (scale 1) over that crossing point and replays the
//! scenario under every planner.
//!
//! Usage: `cargo run --release -p vmtopsis --example calibrate -- <scenario> [--trace] [--snapshot T FILE]`
//!
//! `--snapshot` additionally writes the unbalanced cluster state at time `T` as a snapshot file.

use std::process::ExitCode;

use vmtopsis::simulator::{run, snapshot_at, MetricsTrace, PlannerKind, Scenario};

const HOT_NODE: &str = "PM3";
const PROBE_T: f64 = 450.0;

fn scaled(base: &Scenario, factor: f64) -> Scenario {
    let mut s = base.clone();
    for vm in s.vms.iter_mut().filter(|v| v.host == HOT_NODE) {
        if let Some(peak) = vm.peak.as_mut() {
            peak.magnitude.cpu *= factor;
            peak.magnitude.ram *= factor;
            peak.magnitude.net *= factor;
        }
    }
    s
}

fn score_at(trace: &MetricsTrace, node: &str, t: f64) -> f64 {
    trace.scores_of(node).into_iter().find(|(time, _)| (*time - t).abs() < 1e-9).map_or(f64::NAN, |(_, s)| s)
}

fn bisect(base: &Scenario) -> Result<Option<f64>, Box<dyn std::error::Error>> {
    let threshold = base.controller.threshold;
    let hot = |f: f64| -> Result<bool, Box<dyn std::error::Error>> {
        let mut s = scaled(base, f);
        s.sim.duration = PROBE_T;
        Ok(score_at(&run(&s, PlannerKind::None)?, HOT_NODE, PROBE_T) > threshold)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if hot(lo)? {
        return Ok(Some(0.0));
    }
    while !hot(hi)? {
        hi *= 2.0;
        if hi > 64.0 {
            return Ok(None);
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if hot(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        eprintln!("usage: calibrate <scenario> [--trace] [--snapshot T FILE]");
        return ExitCode::from(2);
    };
    let show_trace = args.iter().any(|a| a == "--trace");
    let snapshot = args.iter().position(|a| a == "--snapshot").map(|i| (args.get(i + 1), args.get(i + 2)));
    let snapshot = match snapshot {
        None => None,
        Some((Some(t), Some(out))) => match t.parse::<f64>() {
            Ok(t) => Some((t, out.clone())),
            Err(_) => {
                eprintln!("--snapshot expects a time in seconds");
                return ExitCode::from(2);
            }
        },
        Some(_) => {
            eprintln!("--snapshot expects a time and an output file");
            return ExitCode::from(2);
        }
    };
    match report(path, show_trace, snapshot) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn report(
    path: &str,
    show_trace: bool,
    snapshot: Option<(f64, String)>,
) -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(path)?;
    if let Some((t, out)) = snapshot {
        let header = format!("# State of {path} at t = {t} s with balancing disabled.\n\n");
        std::fs::write(&out, header + &snapshot_at(&scenario, t)?.to_toml_string())?;
        println!("wrote cluster state at t={t} to {out}");
    }
    match bisect(&scenario)? {
        Some(f) => println!(
            "{HOT_NODE} crosses {} at t={PROBE_T} from peak scale {f:.4}; shipped scale 1 has margin x{:.3}",
            scenario.controller.threshold,
            1.0 / f
        ),
        None => println!("{HOT_NODE} never crosses the threshold at t={PROBE_T}"),
    }
    let probes =
        [0.0, 10.0, 100.0, 134.0, 180.0, 235.0, 360.0, 400.0, 450.0, 540.0, 541.0, 542.0, 550.0, 600.0];
    for planner in PlannerKind::ALL {
        let trace = run(&scenario, planner)?;
        println!("\n== planner {planner}");
        print!("{:>6}", "t");
        for id in &trace.node_ids {
            print!("{id:>8}");
        }
        println!("{:>8}", "UF");
        for row in trace.rows.iter().filter(|r| show_trace || probes.contains(&r.time)) {
            print!("{:>6}", row.time);
            for s in &row.nodes {
                print!("{:>8.1}", s.score);
            }
            println!("{:>8.3}", row.unbalance_factor);
        }
        for c in &trace.cycles {
            println!("cycle t={} decisions={} residual={:?}", c.time, c.decisions, c.residual);
        }
        for e in &trace.events {
            println!(
                "event {} {}->{} trigger={} start={} end={} {:?}",
                e.decision.vm_id,
                e.decision.source_node,
                e.decision.destination_node,
                e.decision.trigger_time,
                e.start,
                e.end,
                e.status
            );
        }
        let hot: Vec<_> = trace
            .node_ids
            .iter()
            .enumerate()
            .filter(|(k, _)| trace.rows.iter().any(|r| r.nodes[*k].score > scenario.controller.threshold))
            .map(|(_, id)| id.as_str())
            .collect();
        println!("nodes ever above threshold: {hot:?}");
    }
    Ok(())
}
