//! Checking layer: adversarial refutation of pebble-free decision tables,
//! independent re-derivation of run facts from traces, and bulk sweep
//! drivers used by the integration suite.
//!
//! Every checker here recomputes its verdict from graphs and position
//! histories without consulting the agent machines, so a bug in the
//! protocol cannot hide inside its own bookkeeping.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bfs::{self, visit_order, visit_order_by_walks};
use crate::gen;
use crate::graph::{Graph, GraphFile, Node};
use crate::pebbles::{place_bipartite, place_general, PebbleColor, PebbleMap};
use crate::sim::{run, Brain, Decision, Outcome, RunReport, SimConfig, TraceAction, TraceRound};
use crate::uxs;

/// Ports a scripted adversary may pick from on the refutation family.
const SCRIPT_PORTS: usize = 3;
/// Latest local round a scripted move may fire.
const SCRIPT_ROUNDS: u64 = 6;
/// Rounds run past the latest wake in refutation runs.
const SCRIPT_HORIZON: u64 = 7;

/// One entry of a pebble-conditional decision table.
fn script_space() -> Vec<Decision> {
    let mut out = vec![Decision::NeverMove];
    for port in 0..SCRIPT_PORTS {
        for t in 1..=SCRIPT_ROUNDS {
            out.push(Decision::MoveOnce { port, at_local_round: t });
        }
    }
    out
}

/// A decision table that no run of the refutation family defeated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Survivor {
    pub pebble_at_first: bool,
    pub pebble_at_second: bool,
    pub when_plain: Decision,
    pub when_pebbled: Decision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    /// Decision tables times pebble patterns examined.
    pub combos: usize,
    pub refuted: usize,
    /// Should be empty: tables that gathered on every variant and
    /// schedule.
    pub survivors: Vec<Survivor>,
}

impl ImpossibilityReport {
    #[must_use]
    pub fn all_refuted(&self) -> bool {
        self.refuted == self.combos && self.survivors.is_empty()
    }
}

/// Exhausts single-move decision tables with one pebble of one color
/// against the three-graph refutation family and both wake schedules.
///
/// A table survives only if every variant and schedule ends with the two
/// agents having covered all nodes without a collision; the report counts
/// the tables defeated by at least one run.
#[must_use]
pub fn impossibility_sweep() -> ImpossibilityReport {
    let family = gen::lower_bound_family();
    let space = script_space();
    let schedules: [[u64; 2]; 3] = [[1, 1], [1, 2], [2, 1]];
    let patterns = [(false, false), (false, true), (true, false), (true, true)];

    let combos: Vec<(usize, usize, (bool, bool))> = (0..space.len())
        .flat_map(|i| (0..space.len()).map(move |j| (i, j)))
        .flat_map(|(i, j)| patterns.iter().map(move |&p| (i, j, p)))
        .collect();

    let survivors: Vec<Survivor> = combos
        .par_iter()
        .filter_map(|&(plain, pebbled, (px, py))| {
            let survives = family.iter().all(|(g, x, y)| {
                let mut pebbles = PebbleMap::new();
                if px {
                    pebbles.place(*x, PebbleColor::Red).expect("distinct nodes");
                }
                if py {
                    pebbles.place(*y, PebbleColor::Red).expect("distinct nodes");
                }
                let brain_at = |has_pebble: bool| {
                    Brain::Scripted(if has_pebble { space[pebbled] } else { space[plain] })
                };
                schedules.iter().all(|&wake| {
                    let report = run(&SimConfig {
                        graph: g,
                        pebbles: &pebbles,
                        starts: [*x, *y],
                        wake,
                        brains: [brain_at(px), brain_at(py)],
                        max_rounds: wake[0].max(wake[1]) + SCRIPT_HORIZON,
                        record_trace: false,
                    });
                    !matches!(report.outcome, Outcome::Collision { .. })
                        && report.union_coverage().len() == g.n()
                })
            });
            survives.then(|| Survivor {
                pebble_at_first: px,
                pebble_at_second: py,
                when_plain: space[plain],
                when_pebbled: space[pebbled],
            })
        })
        .collect();

    ImpossibilityReport { combos: combos.len(), refuted: combos.len() - survivors.len(), survivors }
}

/// Facts recomputed from a position history alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFacts {
    pub collision: Option<(u64, Node)>,
    pub coverage: [BTreeSet<Node>; 2],
    pub termination_rounds: [Option<u64>; 2],
    /// A transition between non-adjacent distinct nodes, if any.
    pub broken_step: Option<String>,
}

impl TraceFacts {
    #[must_use]
    pub fn union_coverage(&self) -> BTreeSet<Node> {
        self.coverage[0].union(&self.coverage[1]).copied().collect()
    }
}

/// Re-derives collisions, coverage, and terminations by walking the
/// recorded positions, independently of the engine's own verdict.
#[must_use]
pub fn check_trace(g: &Graph, starts: [Node; 2], trace: &[TraceRound]) -> TraceFacts {
    let mut prev = starts;
    let mut facts = TraceFacts {
        collision: None,
        coverage: [BTreeSet::from([starts[0]]), BTreeSet::from([starts[1]])],
        termination_rounds: [None, None],
        broken_step: None,
    };
    for row in trace {
        for (i, &now) in row.positions.iter().enumerate() {
            if now != prev[i] && !g.adjacent(prev[i], now) && facts.broken_step.is_none() {
                facts.broken_step =
                    Some(format!("agent {i} jumped {} -> {} in round {}", prev[i], now, row.round));
            }
            facts.coverage[i].insert(now);
            if row.actions[i] == TraceAction::Terminate && facts.termination_rounds[i].is_none() {
                facts.termination_rounds[i] = Some(row.round);
            }
        }
        if row.positions[0] == row.positions[1] && facts.collision.is_none() {
            facts.collision = Some((row.round, row.positions[0]));
        }
        prev = row.positions;
    }
    facts
}

/// Reproduction recipe for a failed instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub graph: GraphFile,
    pub starts: [Node; 2],
    pub wake: [u64; 2],
    pub detail: String,
    /// Command line reproducing the run once the graph is saved to a
    /// file.
    pub replay: String,
}

fn witness(g: &Graph, starts: [Node; 2], wake: [u64; 2], mode: &str, detail: String) -> Witness {
    Witness {
        graph: g.to_file(),
        starts,
        wake,
        detail,
        replay: format!(
            "twinwalk simulate --graph graph.json --mode {mode} --starts {},{} --wake {},{}",
            starts[0], starts[1], wake[0], wake[1]
        ),
    }
}

/// Verdict for one gathering run in general mode.
#[derive(Debug, Clone)]
pub enum GeneralFinding {
    /// The spare pool collapsed to the waiter's node; the instance is
    /// excluded and counted, not run.
    Flagged,
    Pass(GeneralStats),
    Fail(Box<Witness>),
}

#[derive(Debug, Clone, Copy)]
pub struct GeneralStats {
    pub rounds: u64,
    /// Rounds from the initiator's last signaling round to its arrival at
    /// its stop node, when the run signaled at all.
    pub notify_span: Option<u64>,
}

/// Places pebbles for `(a, b)`, runs both general-mode agents, and checks
/// the outcome against independently recomputed facts: no collision, full
/// union coverage, both terminations on the designated stop nodes, and
/// optionally the post-signal walk bound.
#[must_use]
pub fn audit_general_run(
    g: &Graph,
    a: Node,
    b: Node,
    wake: [u64; 2],
    span_limit: Option<u64>,
) -> GeneralFinding {
    let n = g.n();
    let placement = match place_general(g, a, b) {
        Ok(p) => p,
        Err(e) => {
            return GeneralFinding::Fail(Box::new(witness(
                g,
                [a, b],
                wake,
                "general",
                format!("placement failed: {e}"),
            )));
        }
    };
    if placement.green_on_waiter {
        return GeneralFinding::Flagged;
    }
    let config = SimConfig {
        graph: g,
        pebbles: &placement.pebbles,
        starts: [a, b],
        wake,
        brains: [Brain::General, Brain::General],
        max_rounds: crate::sim::default_horizon(n, wake),
        record_trace: true,
    };
    let report = run(&config);
    let fail = |detail: String| {
        GeneralFinding::Fail(Box::new(witness(g, [a, b], wake, "general", detail)))
    };

    if !report.outcome.is_success() {
        return fail(format!("outcome {:?}", report.outcome));
    }
    let facts = check_trace(g, [a, b], &report.trace);
    if let Some((round, node)) = facts.collision {
        return fail(format!("recheck found a collision at node {node} in round {round}"));
    }
    if let Some(broken) = facts.broken_step {
        return fail(broken);
    }
    if facts.union_coverage().len() != n {
        let missed: Vec<Node> = (0..n).filter(|v| !facts.union_coverage().contains(v)).collect();
        return fail(format!("nodes never covered: {missed:?}"));
    }
    if facts.termination_rounds.iter().any(Option::is_none) {
        return fail("an agent never terminated".to_string());
    }

    // Stop-node checks per placement shape.
    let initiator_idx = usize::from(placement.roles.initiator != a);
    let waiter_idx = 1 - initiator_idx;
    if let Some(d) = &placement.decomp {
        let stop = report.final_positions[initiator_idx];
        if stop != d.target {
            return fail(format!("initiator stopped at {stop}, designated stop is {}", d.target));
        }
        let wstop = report.final_positions[waiter_idx];
        if wstop != d.alt_target {
            return fail(format!("waiter stopped at {wstop}, designated stop is {}", d.alt_target));
        }
    } else if n > 2 {
        // Hub shapes: one agent ends on its green-marked start, the other
        // on the green leaf found by the sweep.
        for i in 0..2 {
            let stop = report.final_positions[i];
            if placement.pebbles.at(stop) != Some(PebbleColor::Green) {
                return fail(format!("agent {i} stopped off the green marks, at {stop}"));
            }
        }
    }

    let notify_span = initiator_notify_span(&report, initiator_idx);
    if let (Some(limit), Some(span)) = (span_limit, notify_span) {
        if span > limit {
            return fail(format!("post-signal walk took {span} rounds, limit {limit}"));
        }
    }
    GeneralFinding::Pass(GeneralStats { rounds: report.rounds_run, notify_span })
}

/// Rounds from the initiator's last signaling round to its first stand on
/// its final node afterwards.
fn initiator_notify_span(report: &RunReport, idx: usize) -> Option<u64> {
    let last_notify = report
        .trace
        .iter()
        .rev()
        .find(|row| row.labels[idx].starts_with("notify"))
        .map(|row| row.round)?;
    let stop = report.final_positions[idx];
    let arrival = report
        .trace
        .iter()
        .find(|row| row.round >= last_notify && row.positions[idx] == stop)
        .map(|row| row.round)?;
    Some(arrival - last_notify)
}

/// Verdict for one gathering run in bipartite mode.
#[derive(Debug, Clone)]
pub enum BipartiteFinding {
    Pass(BipartiteStats),
    Fail(Box<Witness>),
}

#[derive(Debug, Clone)]
pub struct BipartiteStats {
    pub rounds: u64,
    /// `(rounds - latest wake) / (n^2 + sequence length)`.
    pub constant: f64,
    /// Set when the two lockstep walks did not start the same round.
    pub deviation: Option<String>,
}

/// Hard ceiling on the measured round constant; a run past it fails
/// instead of merely inflating the report.
const BIPARTITE_CONSTANT_CAP: f64 = 20.0;

/// Places the bipartite marks for `(a, b)`, runs both agents with the
/// given exploration offsets, and checks: no collision, each agent covers
/// every node, the two agents stand in opposite classes on every lockstep
/// round, and the total round count stays linear in `n^2` plus the
/// sequence length.
#[must_use]
pub fn audit_bipartite_run(
    g: &Graph,
    a: Node,
    b: Node,
    wake: [u64; 2],
    offsets: &[usize],
) -> BipartiteFinding {
    let n = g.n();
    let placement = match place_bipartite(g, a, b) {
        Ok(p) => p,
        Err(e) => {
            return BipartiteFinding::Fail(Box::new(witness(
                g,
                [a, b],
                wake,
                "bipartite",
                format!("placement failed: {e}"),
            )));
        }
    };
    let brains = [
        Brain::Bipartite { offsets: offsets.to_vec() },
        Brain::Bipartite { offsets: offsets.to_vec() },
    ];
    let w_max = wake[0].max(wake[1]);
    let budget = (n as u64) * (n as u64) + offsets.len() as u64;
    let config = SimConfig {
        graph: g,
        pebbles: &placement.pebbles,
        starts: [a, b],
        wake,
        brains,
        max_rounds: w_max + (BIPARTITE_CONSTANT_CAP as u64) * budget + 50,
        record_trace: true,
    };
    let report = run(&config);
    let fail = |detail: String| {
        BipartiteFinding::Fail(Box::new(witness(g, [a, b], wake, "bipartite", detail)))
    };

    if !report.outcome.is_success() {
        return fail(format!("outcome {:?}", report.outcome));
    }
    let facts = check_trace(g, [a, b], &report.trace);
    if let Some((round, node)) = facts.collision {
        return fail(format!("recheck found a collision at node {node} in round {round}"));
    }
    if let Some(broken) = facts.broken_step {
        return fail(broken);
    }
    for i in 0..2 {
        if facts.coverage[i].len() != n {
            let missed: Vec<Node> = (0..n).filter(|v| !facts.coverage[i].contains(v)).collect();
            return fail(format!("agent {i} never covered {missed:?}"));
        }
    }

    // Opposite classes on every round where both walks are running.
    let classes = &placement.classes;
    let mut first_run: [Option<u64>; 2] = [None, None];
    for row in &report.trace {
        for (first, label) in first_run.iter_mut().zip(&row.labels) {
            if label == "run" && first.is_none() {
                *first = Some(row.round);
            }
        }
        if row.labels.iter().all(|l| l == "run")
            && classes[row.positions[0]] == classes[row.positions[1]]
        {
            return fail(format!(
                "agents share a class at nodes {:?} in round {}",
                row.positions, row.round
            ));
        }
    }
    let deviation = match first_run {
        [Some(r0), Some(r1)] if r0 != r1 => {
            Some(format!("lockstep walks started in different rounds: {r0} vs {r1}"))
        }
        [None, _] | [_, None] => Some("an agent never reached its lockstep walk".to_string()),
        _ => None,
    };

    let constant = (report.rounds_run.saturating_sub(w_max)) as f64 / budget as f64;
    if constant > BIPARTITE_CONSTANT_CAP {
        return fail(format!("round constant {constant:.2} exceeds the cap"));
    }
    BipartiteFinding::Pass(BipartiteStats { rounds: report.rounds_run, constant, deviation })
}

/// Order fact behind the placement's role assignment: for any graph and
/// any distinct `x`, `y`, it cannot be that `x` lies on every shortest
/// route from `y` to `y`'s view of the far node while `y` lies on every
/// shortest route from `x` to `x`'s, in the strong form measured by exact
/// distance sums through the other node.
#[must_use]
pub fn order_fact_holds(g: &Graph, x: Node, y: Node) -> bool {
    let last_x = bfs::last_visited(g, x);
    let last_y = bfs::last_visited(g, y);
    let through_x = g.distance(y, last_x) == g.distance(y, x) + g.distance(x, last_x);
    let through_y = g.distance(x, last_y) == g.distance(x, y) + g.distance(y, last_y);
    !(through_x && through_y)
}

/// Aggregate of a pass/fail sweep.
#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub runs: usize,
    pub flagged: usize,
    pub failures: Vec<Witness>,
    pub max_notify_span: Option<u64>,
}

impl SweepSummary {
    #[must_use]
    pub fn clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Wake offsets exercised for a graph of `n` nodes in general mode.
#[must_use]
pub fn general_offsets(n: usize) -> [u64; 4] {
    [0, 1, 2, 2 * n as u64 + 3]
}

/// Wake offsets exercised in bipartite mode.
#[must_use]
pub fn bipartite_offsets(n: usize) -> [u64; 3] {
    [0, 1, 2 * n as u64 + 3]
}

/// Runs every port-labeled connected graph up to `n_max` nodes, every
/// ordered start pair, and every wake offset through the general
/// protocol.
#[must_use]
pub fn sweep_general_exhaustive(n_max: usize) -> SweepSummary {
    let mut instances: Vec<(Graph, Node, Node, [u64; 2])> = Vec::new();
    for n in 2..=n_max {
        for g in gen::all_connected_graphs(n) {
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    for delta in general_offsets(n) {
                        instances.push((g.clone(), a, b, [1, 1 + delta]));
                    }
                }
            }
        }
    }
    collect_general(instances.into_par_iter(), None)
}

/// Runs `count` random general-mode instances with 5 to 9 nodes; the
/// post-signal walk must finish within `7n` rounds.  Draws hitting the
/// excluded placement corner are counted in `flagged` and redrawn so all
/// `count` runs are auditable.
#[must_use]
pub fn sweep_general_random(count: usize, seed: u64) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances: Vec<(Graph, Node, Node, [u64; 2])> = Vec::new();
    let mut flagged = 0usize;
    while instances.len() < count {
        let n = rng.gen_range(5..=9);
        let extra = rng.gen_range(0..=n);
        let g = gen::random_graph(n, extra, &mut rng);
        let (a, b) = gen::random_pair(n, &mut rng);
        let offsets = general_offsets(n);
        let delta = offsets[rng.gen_range(0..offsets.len())];
        if place_general(&g, a, b).is_ok_and(|p| p.green_on_waiter) {
            flagged += 1;
            continue;
        }
        instances.push((g, a, b, [1, 1 + delta]));
    }
    let mut summary = collect_general(instances.into_par_iter(), Some(7));
    summary.flagged = flagged;
    summary
}

fn collect_general(
    instances: impl ParallelIterator<Item = (Graph, Node, Node, [u64; 2])>,
    span_factor: Option<u64>,
) -> SweepSummary {
    let findings: Vec<(Option<Witness>, bool, Option<u64>)> = instances
        .map(|(g, a, b, wake)| {
            let limit = span_factor.map(|f| f * g.n() as u64);
            match audit_general_run(&g, a, b, wake, limit) {
                GeneralFinding::Pass(stats) => (None, false, stats.notify_span),
                GeneralFinding::Flagged => (None, true, None),
                GeneralFinding::Fail(w) => (Some(*w), false, None),
            }
        })
        .collect();
    let mut summary = SweepSummary { runs: findings.len(), ..SweepSummary::default() };
    for (fail, flagged, span) in findings {
        if let Some(w) = fail {
            summary.failures.push(w);
        }
        if flagged {
            summary.flagged += 1;
        }
        summary.max_notify_span = summary.max_notify_span.max(span);
    }
    summary
}

/// Aggregate of a bipartite sweep.
#[derive(Debug, Clone, Default)]
pub struct BipartiteSummary {
    pub runs: usize,
    pub failures: Vec<Witness>,
    pub deviations: Vec<String>,
    pub max_constant: f64,
}

impl BipartiteSummary {
    #[must_use]
    pub fn clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// One queued bipartite run: graph, exploration offsets, starts, wake.
type BipartiteInstance = (Graph, Vec<usize>, Node, Node, [u64; 2]);

/// Samples `graphs` random bipartite graphs of 3 to `n_max` nodes and
/// runs every ordered start pair under every wake offset, providing each
/// graph a covering exploration sequence.
#[must_use]
pub fn sweep_bipartite_random(graphs: usize, n_max: usize, seed: u64) -> BipartiteSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances: Vec<BipartiteInstance> = Vec::new();
    let mut summary = BipartiteSummary::default();
    for _ in 0..graphs {
        let n = rng.gen_range(3..=n_max);
        let extra = rng.gen_range(0..=n / 2);
        let g = gen::random_bipartite(n, extra, &mut rng);
        let offsets = match uxs::provide(&g, rng.gen(), 4000) {
            Ok(seq) => seq.offsets().to_vec(),
            Err(e) => {
                summary.failures.push(witness(
                    &g,
                    [0, 0],
                    [1, 1],
                    "bipartite",
                    format!("no exploration sequence: {e}"),
                ));
                continue;
            }
        };
        let n = g.n();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for delta in bipartite_offsets(n) {
                    instances.push((g.clone(), offsets.clone(), a, b, [1, 1 + delta]));
                }
            }
        }
    }
    let findings: Vec<Result<BipartiteStats, Witness>> = instances
        .into_par_iter()
        .map(|(g, offsets, a, b, wake)| match audit_bipartite_run(&g, a, b, wake, &offsets) {
            BipartiteFinding::Pass(stats) => Ok(stats),
            BipartiteFinding::Fail(w) => Err(*w),
        })
        .collect();
    summary.runs = findings.len();
    for f in findings {
        match f {
            Ok(stats) => {
                summary.max_constant = summary.max_constant.max(stats.constant);
                if let Some(d) = stats.deviation {
                    summary.deviations.push(d);
                }
            }
            Err(w) => summary.failures.push(w),
        }
    }
    summary
}

/// Aggregate of the visit-order agreement sweep.
#[derive(Debug, Clone, Default)]
pub struct OrderSummary {
    pub checked: usize,
    pub mismatches: Vec<String>,
}

/// Compares the incremental visit order against the walk-enumeration
/// oracle on every graph and root up to `n_max` nodes, plus `random`
/// random graphs of up to 8 nodes.
#[must_use]
pub fn sweep_order_agreement(n_max: usize, random: usize, seed: u64) -> OrderSummary {
    let mut cases: Vec<(Graph, Node)> = Vec::new();
    for n in 1..=n_max {
        for g in gen::all_connected_graphs(n) {
            for root in 0..n {
                cases.push((g.clone(), root));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let n = rng.gen_range(2..=8);
        let extra = rng.gen_range(0..=n);
        let g = gen::random_graph(n, extra, &mut rng);
        let root = rng.gen_range(0..n);
        cases.push((g, root));
    }
    let mismatches: Vec<String> = cases
        .par_iter()
        .filter_map(|(g, root)| {
            let fast = visit_order(g, *root);
            match visit_order_by_walks(g, *root, 200_000_000) {
                Ok(slow) => (fast.order() != slow.order()).then(|| {
                    format!(
                        "root {root} on {}: incremental {:?} vs enumerated {:?}",
                        g.to_json(),
                        fast.order(),
                        slow.order()
                    )
                }),
                Err(e) => Some(format!("oracle budget on {}: {e}", g.to_json())),
            }
        })
        .collect();
    OrderSummary { checked: cases.len(), mismatches }
}

/// Aggregate of the order-fact sweep.
#[derive(Debug, Clone, Default)]
pub struct OrderFactSummary {
    pub checked: usize,
    pub counterexamples: Vec<String>,
}

/// Samples random `(graph, x, y)` triples and checks the mutual-blocking
/// order fact on each.
#[must_use]
pub fn sweep_order_fact(count: usize, n_max: usize, seed: u64) -> OrderFactSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<(Graph, Node, Node)> = Vec::new();
    for _ in 0..count {
        let n = rng.gen_range(2..=n_max);
        let extra = rng.gen_range(0..=n);
        let g = gen::random_graph(n, extra, &mut rng);
        let (x, y) = gen::random_pair(n, &mut rng);
        cases.push((g, x, y));
    }
    let counterexamples: Vec<String> = cases
        .par_iter()
        .filter_map(|(g, x, y)| {
            (!order_fact_holds(g, *x, *y)).then(|| format!("x {x}, y {y} on {}", g.to_json()))
        })
        .collect();
    OrderFactSummary { checked: cases.len(), counterexamples }
}

/// Aggregate of the determinism sweep.
#[derive(Debug, Clone, Default)]
pub struct ReplaySummary {
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Replays sampled general and bipartite runs twice and under a uniform
/// wake shift; traces must agree exactly, modulo the shift's sleep
/// prefix.
#[must_use]
pub fn sweep_replay(samples: usize, seed: u64) -> ReplaySummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < samples && attempts < samples * 20 {
        attempts += 1;
        let bipartite = rng.gen_bool(0.5);
        let n = rng.gen_range(4..=8);
        let (g, brains, pebbles, starts) = if bipartite {
            let g = gen::random_bipartite(n, rng.gen_range(0..=n / 2), &mut rng);
            let n = g.n();
            let (a, b) = gen::random_pair(n, &mut rng);
            let Ok(seq) = uxs::provide(&g, rng.gen(), 4000) else { continue };
            let Ok(p) = place_bipartite(&g, a, b) else { continue };
            let brains = [
                Brain::Bipartite { offsets: seq.offsets().to_vec() },
                Brain::Bipartite { offsets: seq.offsets().to_vec() },
            ];
            (g, brains, p.pebbles, [a, b])
        } else {
            let g = gen::random_graph(n, rng.gen_range(0..=n), &mut rng);
            let (a, b) = gen::random_pair(n, &mut rng);
            let Ok(p) = place_general(&g, a, b) else { continue };
            if p.green_on_waiter {
                continue;
            }
            (g, [Brain::General, Brain::General], p.pebbles, [a, b])
        };
        let delta = rng.gen_range(0..=2 * n as u64);
        let wake = [1, 1 + delta];
        let base = SimConfig {
            graph: &g,
            pebbles: &pebbles,
            starts,
            wake,
            brains: brains.clone(),
            max_rounds: crate::sim::default_horizon(g.n(), wake),
            record_trace: true,
        };
        let first = run(&base);
        let second = run(&base);
        checked += 1;
        let id = format!("run {checked} (bipartite {bipartite}, n {n})");
        let enc = |r: &RunReport| serde_json::to_string(&r.trace).expect("trace serializes");
        if enc(&first) != enc(&second) || first.outcome != second.outcome {
            failures.push(format!("{id}: repeat diverged"));
            continue;
        }
        let shift = rng.gen_range(1..=5u64);
        let shifted_wake = [wake[0] + shift, wake[1] + shift];
        let shifted = run(&SimConfig {
            wake: shifted_wake,
            max_rounds: base.max_rounds + shift,
            brains: brains.clone(),
            ..base
        });
        if shifted.outcome.is_success() != first.outcome.is_success() {
            failures.push(format!("{id}: shift changed the outcome"));
            continue;
        }
        let aligned = shifted.trace.len() >= shift as usize
            && first.trace.len() == shifted.trace.len() - shift as usize
            && first.trace.iter().zip(shifted.trace.iter().skip(shift as usize)).all(
                |(orig, moved)| {
                    orig.positions == moved.positions
                        && orig.actions == moved.actions
                        && orig.labels == moved.labels
                },
            )
            && shifted.trace[..shift as usize]
                .iter()
                .all(|row| row.positions == starts && row.awake == [false, false]);
        if !aligned {
            failures.push(format!("{id}: shifted trace does not align"));
        }
    }
    ReplaySummary { checked, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The refutation family defeats every single-pebble decision table.
    #[test]
    fn no_decision_table_survives_the_family() {
        let report = impossibility_sweep();
        assert_eq!(report.combos, 4 * 19 * 19);
        assert!(report.all_refuted(), "survivors: {:?}", report.survivors);
    }

    /// Trace recheck spots collisions and coverage independently.
    #[test]
    fn trace_recheck_agrees_with_engine() {
        let g = gen::three_path();
        let pebbles = PebbleMap::new();
        let report = run(&SimConfig {
            graph: &g,
            pebbles: &pebbles,
            starts: [0, 2],
            wake: [1, 1],
            brains: [
                Brain::Scripted(Decision::MoveOnce { port: 0, at_local_round: 1 }),
                Brain::Scripted(Decision::MoveOnce { port: 0, at_local_round: 1 }),
            ],
            max_rounds: 5,
            record_trace: true,
        });
        let facts = check_trace(&g, [0, 2], &report.trace);
        assert_eq!(facts.collision, Some((1, 1)));
        assert_eq!(report.outcome, Outcome::Collision { round: 1, node: 1 });
    }

    /// Every ordered pair on every labeled 3-node graph gathers.
    #[test]
    fn exhaustive_three_node_general_runs_pass() {
        let summary = sweep_general_exhaustive(3);
        assert!(summary.clean(), "failures: {:#?}", summary.failures);
        assert!(summary.runs > 0);
    }

    /// A six-cycle with adjacent and distant starts completes in
    /// bipartite mode with both agents covering everything.
    #[test]
    fn six_cycle_bipartite_runs_pass() {
        let g = gen::random_bipartite(6, 0, &mut ChaCha8Rng::seed_from_u64(9));
        let seq = uxs::provide(&g, 7, 4000).expect("sequence");
        for (a, b) in [(0, 1), (0, 3), (2, 5)] {
            for delta in bipartite_offsets(g.n()) {
                let finding = audit_bipartite_run(&g, a, b, [1, 1 + delta], seq.offsets());
                match finding {
                    BipartiteFinding::Pass(stats) => {
                        assert!(stats.deviation.is_none(), "{:?}", stats.deviation);
                    }
                    BipartiteFinding::Fail(w) => panic!("failed: {w:?}"),
                }
            }
        }
    }

    #[test]
    fn order_fact_on_a_path() {
        let g = gen::three_path();
        assert!(order_fact_holds(&g, 0, 2));
        assert!(order_fact_holds(&g, 1, 2));
    }

    /// Identical configurations replay identically and survive wake
    /// shifts.
    #[test]
    fn replay_sample_is_deterministic() {
        let summary = sweep_replay(12, 31);
        assert!(summary.failures.is_empty(), "{:?}", summary.failures);
        assert!(summary.checked >= 10);
    }
}
