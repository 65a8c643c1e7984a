//! Command-line driver: instance generation, placement inspection, single
//! runs, the decision-table refutation, and the bulk verification sweeps.
//!
//! Exit codes: 0 clean, 1 a checked property failed, 2 bad input or I/O.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twinwalk::graph::{Graph, GraphFile, Node};
use twinwalk::pebbles::{place_bipartite, place_general, PebbleColor, PebbleMap};
use twinwalk::sim::{default_horizon, run, Brain, SimConfig};
use twinwalk::verify::Witness;
use twinwalk::{bfs, gen, uxs, verify};

/// Seed used when `--seed` is absent.  Printed on use so every run stays
/// reproducible; wall-clock seeding is deliberately not offered.
const DEFAULT_SEED: u64 = 20240817;

#[derive(Parser)]
#[command(name = "twinwalk")]
#[command(about = "Two-agent collision-free graph exploration: runs and checks")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random connected graph as JSON.
    GenGraph(GenGraphArgs),
    /// Print the anonymous first-visit order from a root node.
    BfsOrder(BfsOrderArgs),
    /// Compute the pebble placement for a designated start pair.
    PlacePebbles(PlaceArgs),
    /// Run one two-agent instance and report the outcome.
    Simulate(SimulateArgs),
    /// Refute every pebble-conditional one-move table on the three-graph
    /// lower-bound family.
    VerifyImpossibility,
    /// Run a bulk verification sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenGraphArgs {
    /// Number of nodes.
    #[arg(long)]
    nodes: usize,
    /// Extra edges beyond the random spanning tree.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    /// Generate a connected bipartite graph instead.
    #[arg(long)]
    bipartite: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the graph here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit DOT instead of JSON.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct BfsOrderArgs {
    /// Graph file (JSON).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    root: Node,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    General,
    Bipartite,
}

#[derive(Args)]
struct PlaceArgs {
    /// Graph file (JSON).
    #[arg(long)]
    graph: PathBuf,
    /// Designated start nodes, comma separated.
    #[arg(long, value_parser = parse_node_pair)]
    starts: (Node, Node),
    #[arg(long, value_enum)]
    mode: Mode,
    /// Emit the pebbled graph as DOT after the summary.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph file (JSON).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Start nodes, comma separated.
    #[arg(long, value_parser = parse_node_pair)]
    starts: (Node, Node),
    /// Wake rounds (1-based), comma separated.
    #[arg(long, value_parser = parse_wake_pair)]
    wake: (u64, u64),
    /// Round budget; defaults to the mode's horizon for the graph.
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Print every round as a JSON line before the summary.
    #[arg(long)]
    trace: bool,
    /// Seed for the exploration-sequence search (bipartite mode only).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Every connected port-labeled graph up to `--n-max` nodes, every
    /// ordered start pair, every wake offset.
    GeneralExhaustive,
    /// `--count` seeded random general-mode instances on 5 to 9 nodes.
    GeneralRandom,
    /// `--count` random bipartite graphs up to `--n-max` nodes, all start
    /// pairs and wake offsets.
    Bipartite,
    /// First-visit order against the walk-enumeration oracle.
    Order,
    /// Random mutual-blocking order facts.
    OrderFact,
    /// Re-run sampled instances and compare traces bit for bit.
    Replay,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Instance or graph count for the randomized kinds.
    #[arg(long)]
    count: Option<usize>,
    /// Size ceiling for the exhaustive and bipartite kinds.
    #[arg(long)]
    n_max: Option<usize>,
    /// Worker threads for this sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("graph file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Graph(#[from] twinwalk::graph::GraphError),
    #[error("placement: {0}")]
    Place(#[from] twinwalk::pebbles::PlacementError),
    #[error("exploration sequence: {0}")]
    Uxs(#[from] twinwalk::uxs::UxsError),
    #[error("{0}")]
    Input(String),
}

fn parse_node_pair(s: &str) -> Result<(Node, Node), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| "expected two values: A,B".to_string())?;
    let a = a.trim().parse().map_err(|e| format!("first node: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("second node: {e}"))?;
    Ok((a, b))
}

fn parse_wake_pair(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| "expected two values: W0,W1".to_string())?;
    let a: u64 = a.trim().parse().map_err(|e| format!("first wake round: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("second wake round: {e}"))?;
    if a == 0 || b == 0 {
        return Err("wake rounds are 1-based".to_string());
    }
    Ok((a, b))
}

fn load_graph(path: &PathBuf) -> Result<Graph, CliError> {
    let text = fs::read_to_string(path)?;
    let file: GraphFile = serde_json::from_str(&text)?;
    Ok(Graph::from_file(&file)?)
}

/// Resolves the seed and echoes the fixed default when it is used.
fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            println!("seed {DEFAULT_SEED} (fixed default)");
            DEFAULT_SEED
        }
    }
}

fn color_name(c: PebbleColor) -> &'static str {
    match c {
        PebbleColor::Red => "red",
        PebbleColor::Blue => "blue",
        PebbleColor::Green => "green",
        PebbleColor::Black => "black",
    }
}

fn pebble_marks(pebbles: &PebbleMap, starts: [Node; 2]) -> BTreeMap<Node, String> {
    let mut marks: BTreeMap<Node, String> =
        pebbles.iter().map(|(v, c)| (v, color_name(c).to_string())).collect();
    for (i, s) in starts.into_iter().enumerate() {
        marks
            .entry(s)
            .and_modify(|m| *m = format!("{m}\\nstart {i}"))
            .or_insert_with(|| format!("start {i}"));
    }
    marks
}

fn check_nodes(g: &Graph, nodes: &[Node]) -> Result<(), CliError> {
    for &v in nodes {
        if v >= g.n() {
            return Err(CliError::Input(format!(
                "node {v} out of range for a {}-node graph",
                g.n()
            )));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // One worker unless a sweep asks for more; sweeps install their own
    // pool over this.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    let result = match cli.command {
        Command::GenGraph(args) => gen_graph(&args),
        Command::BfsOrder(args) => bfs_order(&args),
        Command::PlacePebbles(args) => place_pebbles(&args),
        Command::Simulate(args) => simulate(&args),
        Command::VerifyImpossibility => verify_impossibility(),
        Command::Sweep(args) => sweep(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn gen_graph(args: &GenGraphArgs) -> Result<ExitCode, CliError> {
    if args.nodes == 0 {
        return Err(CliError::Input("graphs need at least one node".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(args.seed));
    let g = if args.bipartite {
        gen::random_bipartite(args.nodes, args.extra, &mut rng)
    } else {
        gen::random_graph(args.nodes, args.extra, &mut rng)
    };
    let text = if args.dot { g.to_dot(&BTreeMap::new()) } else { g.to_json() };
    match &args.out {
        Some(path) => {
            fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn bfs_order(args: &BfsOrderArgs) -> Result<ExitCode, CliError> {
    let g = load_graph(&args.graph)?;
    check_nodes(&g, &[args.root])?;
    let v = bfs::visit_order(&g, args.root);
    let order: Vec<String> = v.order().iter().map(|n| n.to_string()).collect();
    println!("order {}", order.join(" "));
    println!("last {}", v.last());
    Ok(ExitCode::SUCCESS)
}

fn place_pebbles(args: &PlaceArgs) -> Result<ExitCode, CliError> {
    let g = load_graph(&args.graph)?;
    let (a, b) = args.starts;
    check_nodes(&g, &[a, b])?;
    if a == b {
        return Err(CliError::Input("start nodes must differ".to_string()));
    }
    let pebbles = match args.mode {
        Mode::General => {
            let p = place_general(&g, a, b)?;
            println!("case {:?}", p.case);
            println!(
                "waiter {} initiator {}{}",
                p.roles.waiter,
                p.roles.initiator,
                if p.roles.swapped { " (roles swapped)" } else { "" }
            );
            if let Some(d) = &p.decomp {
                println!("target {} alternate {}", d.target, d.alt_target);
            }
            if p.green_on_waiter {
                println!("flagged: the waiter's start holds the green pebble");
            }
            p.pebbles
        }
        Mode::Bipartite => {
            let p = place_bipartite(&g, a, b)?;
            println!("marked {} unmarked {}", p.marked, p.unmarked);
            p.pebbles
        }
    };
    for (v, c) in pebbles.iter() {
        println!("node {v} {}", color_name(c));
    }
    if args.dot {
        println!("{}", g.to_dot(&pebble_marks(&pebbles, [a, b])));
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: &SimulateArgs) -> Result<ExitCode, CliError> {
    let g = load_graph(&args.graph)?;
    let (a, b) = args.starts;
    check_nodes(&g, &[a, b])?;
    if a == b {
        return Err(CliError::Input("start nodes must differ".to_string()));
    }
    let wake = [args.wake.0, args.wake.1];
    let (pebbles, brains) = match args.mode {
        Mode::General => {
            let p = place_general(&g, a, b)?;
            if p.green_on_waiter {
                println!("flagged: the waiter's start holds the green pebble; expect a stall");
            }
            (p.pebbles, [Brain::General, Brain::General])
        }
        Mode::Bipartite => {
            let p = place_bipartite(&g, a, b)?;
            let seq = uxs::provide(&g, resolve_seed(args.seed), 4000)?;
            let offsets = seq.offsets().to_vec();
            (
                p.pebbles,
                [Brain::Bipartite { offsets: offsets.clone() }, Brain::Bipartite { offsets }],
            )
        }
    };
    let config = SimConfig {
        graph: &g,
        pebbles: &pebbles,
        starts: [a, b],
        wake,
        brains,
        max_rounds: args.max_rounds.unwrap_or_else(|| default_horizon(g.n(), wake)),
        record_trace: args.trace,
    };
    let report = run(&config);
    if args.trace {
        for row in &report.trace {
            println!("{}", serde_json::to_string(row).expect("trace rows serialize"));
        }
    }
    println!("outcome {:?}", report.outcome);
    println!("rounds {}", report.rounds_run);
    println!("final positions {:?}", report.final_positions);
    println!(
        "coverage {} + {} of {} (union {})",
        report.coverage[0].len(),
        report.coverage[1].len(),
        g.n(),
        report.union_coverage().len()
    );
    Ok(if report.outcome.is_success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn verify_impossibility() -> Result<ExitCode, CliError> {
    let r = verify::impossibility_sweep();
    println!("combos {} refuted {} survivors {}", r.combos, r.refuted, r.survivors.len());
    for s in &r.survivors {
        println!("survivor {}", serde_json::to_string(s).expect("survivors serialize"));
    }
    Ok(if r.all_refuted() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_witnesses(failures: &[Witness]) {
    const SHOWN: usize = 5;
    for w in failures.iter().take(SHOWN) {
        println!("failure: {}", w.detail);
        println!("  starts {:?} wake {:?}", w.starts, w.wake);
        println!("  graph {}", serde_json::to_string(&w.graph).expect("graphs serialize"));
        println!("  replay: {}", w.replay);
    }
    if failures.len() > SHOWN {
        println!("... and {} more", failures.len() - SHOWN);
    }
}

fn sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Input("--jobs must be at least 1".to_string()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let clean = match args.kind {
        SweepKind::GeneralExhaustive => {
            let n_max = args.n_max.unwrap_or(4);
            let s = pool.install(|| verify::sweep_general_exhaustive(n_max));
            println!(
                "runs {} flagged {} failures {} max-signal-span {:?}",
                s.runs,
                s.flagged,
                s.failures.len(),
                s.max_notify_span
            );
            print_witnesses(&s.failures);
            s.clean()
        }
        SweepKind::GeneralRandom => {
            let count = args.count.unwrap_or(1000);
            let seed = resolve_seed(args.seed);
            let s = pool.install(|| verify::sweep_general_random(count, seed));
            println!(
                "runs {} flagged {} failures {} max-signal-span {:?}",
                s.runs,
                s.flagged,
                s.failures.len(),
                s.max_notify_span
            );
            print_witnesses(&s.failures);
            s.clean()
        }
        SweepKind::Bipartite => {
            let count = args.count.unwrap_or(25);
            let n_max = args.n_max.unwrap_or(8);
            let seed = resolve_seed(args.seed);
            let s = pool.install(|| verify::sweep_bipartite_random(count, n_max, seed));
            println!(
                "runs {} failures {} deviations {} max-round-constant {:.3}",
                s.runs,
                s.failures.len(),
                s.deviations.len(),
                s.max_constant
            );
            for d in &s.deviations {
                println!("deviation: {d}");
            }
            print_witnesses(&s.failures);
            s.clean()
        }
        SweepKind::Order => {
            let n_max = args.n_max.unwrap_or(4);
            let random = args.count.unwrap_or(500);
            let seed = resolve_seed(args.seed);
            let s = pool.install(|| verify::sweep_order_agreement(n_max, random, seed));
            println!("checked {} mismatches {}", s.checked, s.mismatches.len());
            for m in s.mismatches.iter().take(5) {
                println!("mismatch: {m}");
            }
            s.mismatches.is_empty()
        }
        SweepKind::OrderFact => {
            let count = args.count.unwrap_or(1000);
            let n_max = args.n_max.unwrap_or(12);
            let seed = resolve_seed(args.seed);
            let s = pool.install(|| verify::sweep_order_fact(count, n_max, seed));
            println!("checked {} counterexamples {}", s.checked, s.counterexamples.len());
            for c in s.counterexamples.iter().take(5) {
                println!("counterexample: {c}");
            }
            s.counterexamples.is_empty()
        }
        SweepKind::Replay => {
            let count = args.count.unwrap_or(100);
            let seed = resolve_seed(args.seed);
            let s = pool.install(|| verify::sweep_replay(count, seed));
            println!("checked {} failures {}", s.checked, s.failures.len());
            for f in s.failures.iter().take(5) {
                println!("failure: {f}");
            }
            s.failures.is_empty()
        }
    };
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
