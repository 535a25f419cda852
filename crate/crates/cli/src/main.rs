//! `vmtopsis` command-line front end.

mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vmtopsis::cluster::{ClusterError, ClusterSnapshot};
use vmtopsis::controller::{
    detect_hotspots, percent, rank_nodes, select_destination, victim_scores, ControlError, ControllerConfig,
};
use vmtopsis::simulator::{planner_timing, run, MetricsTrace, PlannerKind, Scenario, SimError, TimingRow};

/// Exit status with its message; codes are part of the scripting contract.
#[derive(Debug)]
enum Failure {
    /// Input could not be parsed or failed validation.
    Input(String),
    /// A file could not be read or written.
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<ClusterError> for Failure {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<ControlError> for Failure {
    fn from(e: ControlError) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Outcome of a successful command.
#[derive(Debug, PartialEq, Eq)]
enum Completion {
    Clean,
    /// The run finished but some planner invocation left hotspots unmitigated.
    ResidualHotspots,
}

#[derive(Parser, Debug)]
#[command(
    name = "vmtopsis",
    version,
    about = "Hotspot detection and VM migration planning with fuzzy TOPSIS"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Hotspot threshold on the 0-100 score scale.
    #[arg(long, global = true, env = "VMTOPSIS_THRESHOLD")]
    threshold: Option<f64>,
    /// Control interval in seconds.
    #[arg(long, global = true, env = "VMTOPSIS_INTERVAL")]
    interval: Option<f64>,
    /// Planner: fuzzy, crisp, sandpiper or none.
    #[arg(long, global = true, env = "VMTOPSIS_PLANNER")]
    planner: Option<PlannerKind>,
    /// Seed for demand noise and synthetic clusters.
    #[arg(long, global = true, env = "VMTOPSIS_SEED")]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, global = true, env = "VMTOPSIS_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank the nodes of a snapshot and, for the hottest node, pick victim and destination.
    Rank { snapshot: PathBuf },
    /// Run a scenario and write trace.csv, events.csv, summary.csv and planner_timing.csv.
    Simulate { scenario: PathBuf },
    /// Run a scenario once per planner and tabulate the results.
    Compare {
        scenario: PathBuf,
        /// Comma-separated planner subset; defaults to all four.
        #[arg(long, value_delimiter = ',')]
        planners: Option<Vec<PlannerKind>>,
    },
    /// Time one full two-level decision on synthetic clusters of growing size.
    Bench {
        /// Comma-separated total VM counts.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        sizes: Vec<usize>,
        /// Number of nodes the VMs are spread over.
        #[arg(long, default_value_t = 50)]
        nodes: usize,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Completion::Clean) => ExitCode::SUCCESS,
        Ok(Completion::ResidualHotspots) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn execute(cli: Cli) -> Result<Completion, Failure> {
    let o = &cli.overrides;
    match cli.command {
        Command::Rank { snapshot } => cmd_rank(&snapshot, o),
        Command::Simulate { scenario } => cmd_simulate(&scenario, o),
        Command::Compare { scenario, planners } => cmd_compare(&scenario, planners, o),
        Command::Bench { sizes, nodes, repetitions } => cmd_bench(&sizes, nodes, repetitions, o),
    }
}

fn controller_config(o: &Overrides) -> Result<ControllerConfig, Failure> {
    let mut config = ControllerConfig::default();
    if let Some(t) = o.threshold {
        config.threshold = t;
    }
    if let Some(i) = o.interval {
        config.control_interval = i;
    }
    match o.planner.map(PlannerKind::pipeline) {
        Some(Some(p)) => config.pipeline = p,
        Some(None) => return Err(Failure::Input("planner `none` has no ranking to report".into())),
        None => {}
    }
    config.validate()?;
    Ok(config)
}

fn load_scenario(path: &Path, o: &Overrides) -> Result<Scenario, Failure> {
    let mut scenario = Scenario::load(path)?;
    if let Some(t) = o.threshold {
        scenario.controller.threshold = t;
    }
    if let Some(i) = o.interval {
        scenario.sim.control_interval = i;
    }
    if let Some(p) = o.planner {
        scenario.sim.planner = p;
    }
    if let Some(s) = o.seed {
        scenario.sim.seed = s;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn out_dir(o: &Overrides) -> PathBuf {
    o.out.clone().unwrap_or_else(|| PathBuf::from("vmtopsis-out"))
}

fn write_file(path: &Path, f: impl FnOnce(std::fs::File) -> std::io::Result<()>) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::File::create(path).and_then(f).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn cmd_rank(path: &Path, o: &Overrides) -> Result<Completion, Failure> {
    let config = controller_config(o)?;
    let snap = ClusterSnapshot::load(path)?;
    let ranking = rank_nodes(&snap.nodes, &config)?;
    let nodes: Vec<(String, f64)> = ranking.ranked().map(|(id, s)| (id.to_string(), percent(s))).collect();
    print!("{}", report::node_table(&nodes, config.threshold, ranking.degenerate));

    let hot = detect_hotspots(&ranking, &config);
    let mut level_two = None;
    match hot.first() {
        None => println!("no hotspot above threshold {}", config.threshold),
        Some(host) => {
            let hosted: Vec<_> = snap.vms_on(host).cloned().collect();
            if hosted.is_empty() {
                println!("hotspot {host} hosts no VMs; nothing to migrate");
            } else {
                let scores = victim_scores(&hosted, &config)?;
                let victim = hosted.iter().find(|v| v.vm_id == scores[0].0).expect("victim is hosted");
                let destination = select_destination(&ranking, victim, &snap.nodes, &config)?;
                println!();
                print!("{}", report::vm_table(host, &scores, config.pipeline));
                println!();
                println!("victim:      {}", victim.vm_id);
                match &destination {
                    Some(d) => println!("destination: {d}"),
                    None => println!("destination: none fits without crossing the threshold"),
                }
                level_two = Some((host.clone(), scores, destination));
            }
        }
    }
    if let Some(dir) = &o.out {
        write_file(&dir.join("node_ranking.csv"), |f| report::write_node_csv(f, &nodes))?;
        if let Some((host, scores, destination)) = &level_two {
            write_file(&dir.join("vm_ranking.csv"), |f| {
                report::write_vm_csv(f, host, scores, destination.as_deref())
            })?;
        }
    }
    Ok(Completion::Clean)
}

fn cmd_simulate(path: &Path, o: &Overrides) -> Result<Completion, Failure> {
    let scenario = load_scenario(path, o)?;
    let trace = run(&scenario, scenario.sim.planner)?;
    let dir = out_dir(o);
    trace.write_outputs(&dir)?;
    print!("{}", trace.summary());
    println!();
    print!("{}", report::event_table(&trace));
    println!("\noutputs written to {}", dir.display());
    Ok(completion(&[&trace]))
}

fn completion(traces: &[&MetricsTrace]) -> Completion {
    if traces.iter().any(|t| t.has_residual_hotspots()) {
        Completion::ResidualHotspots
    } else {
        Completion::Clean
    }
}

fn cmd_compare(
    path: &Path,
    planners: Option<Vec<PlannerKind>>,
    o: &Overrides,
) -> Result<Completion, Failure> {
    let scenario = load_scenario(path, o)?;
    let mut planners = planners.unwrap_or_else(|| PlannerKind::ALL.to_vec());
    planners.dedup();
    if planners.is_empty() {
        return Err(Failure::Input("--planners: at least one planner is required".into()));
    }
    let results: Vec<Result<MetricsTrace, SimError>> = std::thread::scope(|s| {
        let handles: Vec<_> = planners
            .iter()
            .map(|&p| {
                let scenario = &scenario;
                s.spawn(move || run(scenario, p))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let traces = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let dir = out_dir(o);
    for trace in &traces {
        trace.write_outputs(&dir.join(trace.planner.to_string()))?;
    }
    let summaries: Vec<_> = traces.iter().map(MetricsTrace::summary).collect();
    write_file(&dir.join("compare.csv"), |f| report::write_compare_csv(f, &summaries))?;
    print!("{}", report::compare_table(&summaries));
    println!("\noutputs written to {}", dir.display());
    Ok(completion(&traces.iter().collect::<Vec<_>>()))
}

fn cmd_bench(
    sizes: &[usize],
    nodes: usize,
    repetitions: usize,
    o: &Overrides,
) -> Result<Completion, Failure> {
    let config = controller_config(&Overrides { planner: None, ..o.clone() })?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Failure::Input("--sizes: VM counts must be positive".into()));
    }
    if nodes == 0 {
        return Err(Failure::Input("--nodes: must be positive".into()));
    }
    if repetitions < 3 {
        return Err(Failure::Input(format!("--repetitions: {repetitions} is below the minimum of 3")));
    }
    let seed = o.seed.unwrap_or(0);
    let mut rows: Vec<TimingRow> = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let n = nodes.min(size);
        let per_node = (size as f64 / n as f64).round().max(1.0) as usize;
        rows.push(planner_timing(n, per_node, repetitions, seed, &config)?);
    }
    print!("{}", report::bench_table(&rows));
    if let Some(dir) = &o.out {
        write_file(&dir.join("bench.csv"), |f| report::write_bench_csv(f, &rows))?;
    }
    Ok(Completion::Clean)
}
