//! Synchronous execution of two agents on a port-labeled graph.
//!
//! Rounds are global and 1-based.  An agent is awake in round `r` when
//! `r >= wake`.  Every round, perceptions are computed from start-of-round
//! positions, both awake agents choose an action, and the moves apply
//! simultaneously.  Two agents on the same node at the end of a round is a
//! collision, including moves onto a sleeping or terminated agent; passing
//! each other across one edge is not, since their end nodes differ.
//! Sensing is positional: a sleeping or terminated agent is still sensed
//! by an adjacent one.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agent::{Action, BipartiteMachine, GeneralMachine, Perception};
use crate::graph::{Graph, Node, Port};
use crate::pebbles::PebbleMap;

/// Fixed decision table for an adversarially scripted agent: stay forever,
/// or make one move at a chosen local round and stay around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    NeverMove,
    MoveOnce { port: Port, at_local_round: u64 },
}

/// Program driving one agent.
#[derive(Debug, Clone)]
pub enum Brain {
    General,
    Bipartite { offsets: Vec<usize> },
    Scripted(Decision),
}

enum Runner {
    General(GeneralMachine),
    Bipartite(BipartiteMachine),
    Scripted(Decision),
}

impl Runner {
    fn new(brain: &Brain) -> Self {
        match brain {
            Brain::General => Runner::General(GeneralMachine::new()),
            Brain::Bipartite { offsets } => {
                Runner::Bipartite(BipartiteMachine::new(offsets.clone()))
            }
            Brain::Scripted(d) => Runner::Scripted(*d),
        }
    }

    fn step(&mut self, p: &Perception) -> Result<Action, String> {
        match self {
            Runner::General(m) => m.step(p).map_err(|e| e.to_string()),
            Runner::Bipartite(m) => m.step(p).map_err(|e| e.to_string()),
            Runner::Scripted(d) => Ok(match *d {
                Decision::NeverMove => Action::Stay,
                Decision::MoveOnce { port, at_local_round } => {
                    if p.local_round == at_local_round && port < p.degree {
                        Action::Move(port)
                    } else {
                        Action::Stay
                    }
                }
            }),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Runner::General(m) => m.label(),
            Runner::Bipartite(m) => m.label(),
            Runner::Scripted(_) => "scripted",
        }
    }
}

/// One run's inputs.
#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub graph: &'a Graph,
    pub pebbles: &'a PebbleMap,
    pub starts: [Node; 2],
    /// Global wake rounds, 1-based.
    pub wake: [u64; 2],
    pub brains: [Brain; 2],
    /// Hard stop; a run still going at this round reports `Timeout`.
    pub max_rounds: u64,
    /// Keep the full per-round trace in the report.
    pub record_trace: bool,
}

/// Generous horizon for runs expected to finish: wake spread plus room
/// for the longest search, notify, and enumeration phases.
#[must_use]
pub fn default_horizon(n: usize, wake: [u64; 2]) -> u64 {
    let n = n as u64;
    wake[0].max(wake[1]).saturating_add(200 * n * n + 500).saturating_add(walk_budget(n))
}

/// Upper bound on rounds the depth-first walk enumeration can take before
/// reaching any node at distance `d`: the full walk tree of depth `d` with
/// branching `n`, each edge crossed twice.
fn walk_budget(n: u64) -> u64 {
    let mut total: u64 = 0;
    let mut walks: u64 = 1;
    for _ in 0..n.min(9) {
        walks = walks.saturating_mul(n);
        total = total.saturating_add(walks.saturating_mul(2));
        if total > 1_000_000_000 {
            return 1_000_000_000;
        }
    }
    total
}

/// How one run ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Both agents terminated; per-agent global termination rounds.
    Success {
        termination_rounds: [u64; 2],
    },
    Collision {
        round: u64,
        node: Node,
    },
    Timeout,
    /// An agent faulted or chose an illegal port.
    IllegalState {
        round: u64,
        agent: usize,
        detail: String,
    },
}

impl Outcome {
    #[must_use]
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success { .. })
    }
}

/// Recorded state of one round, after moves applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRound {
    pub round: u64,
    pub positions: [Node; 2],
    pub actions: [TraceAction; 2],
    pub labels: [String; 2],
    pub awake: [bool; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceAction {
    Asleep,
    Stay,
    Move(Port),
    Terminate,
}

impl From<Action> for TraceAction {
    fn from(a: Action) -> Self {
        match a {
            Action::Stay => TraceAction::Stay,
            Action::Move(p) => TraceAction::Move(p),
            Action::Terminate => TraceAction::Terminate,
        }
    }
}

/// Everything observed in one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    /// Nodes each agent stood on at any round end, plus its start.
    pub coverage: [BTreeSet<Node>; 2],
    /// Per-round history; empty unless `record_trace` was set.
    pub trace: Vec<TraceRound>,
    pub rounds_run: u64,
    /// Where each agent stood when the run ended.
    pub final_positions: [Node; 2],
}

impl RunReport {
    /// Union of both agents' covered nodes.
    #[must_use]
    pub fn union_coverage(&self) -> BTreeSet<Node> {
        self.coverage[0].union(&self.coverage[1]).copied().collect()
    }
}

/// Runs one configuration to completion, collision, fault, or horizon.
///
/// Starts must be distinct; wake rounds are 1-based and at least 1.
#[must_use]
pub fn run(config: &SimConfig) -> RunReport {
    assert_ne!(config.starts[0], config.starts[1], "agents must start apart");
    assert!(config.wake.iter().all(|&w| w >= 1), "wake rounds are 1-based");

    let g = config.graph;
    let mut pos = config.starts;
    let mut entry: [Option<Port>; 2] = [None, None];
    let mut done = [false, false];
    let mut done_round = [0u64, 0u64];
    let mut runners = [Runner::new(&config.brains[0]), Runner::new(&config.brains[1])];
    let mut coverage: [BTreeSet<Node>; 2] = [BTreeSet::from([pos[0]]), BTreeSet::from([pos[1]])];
    let mut trace = Vec::new();

    for round in 1..=config.max_rounds {
        let snapshot = pos;
        let mut actions = [TraceAction::Asleep, TraceAction::Asleep];
        let mut labels = [String::new(), String::new()];
        let mut awake = [false, false];

        for i in 0..2 {
            awake[i] = round >= config.wake[i];
            if !awake[i] {
                labels[i] = "asleep".to_string();
                continue;
            }
            if done[i] {
                actions[i] = TraceAction::Stay;
                labels[i] = "terminated".to_string();
                continue;
            }
            let here = snapshot[i];
            let percept = Perception {
                degree: g.deg(here),
                pebble: config.pebbles.at(here),
                other_agent_adjacent: g.adjacent(here, snapshot[1 - i]),
                entry_port: entry[i],
                local_round: round - config.wake[i] + 1,
                n: g.n(),
            };
            let action = match runners[i].step(&percept) {
                Ok(a) => a,
                Err(detail) => {
                    return RunReport {
                        outcome: Outcome::IllegalState { round, agent: i, detail },
                        coverage,
                        trace,
                        rounds_run: round,
                        final_positions: pos,
                    };
                }
            };
            labels[i] = runners[i].label().to_string();
            actions[i] = action.into();
            match action {
                Action::Stay => {}
                Action::Terminate => {
                    done[i] = true;
                    done_round[i] = round;
                }
                Action::Move(port) => {
                    let Ok((next, far_port)) = g.neighbor(here, port) else {
                        let detail =
                            format!("move through port {port} at a node of degree {}", g.deg(here));
                        return RunReport {
                            outcome: Outcome::IllegalState { round, agent: i, detail },
                            coverage,
                            trace,
                            rounds_run: round,
                            final_positions: pos,
                        };
                    };
                    pos[i] = next;
                    entry[i] = Some(far_port);
                }
            }
        }

        for i in 0..2 {
            coverage[i].insert(pos[i]);
        }
        if config.record_trace {
            trace.push(TraceRound { round, positions: pos, actions, labels, awake });
        }

        if pos[0] == pos[1] {
            return RunReport {
                outcome: Outcome::Collision { round, node: pos[0] },
                coverage,
                trace,
                rounds_run: round,
                final_positions: pos,
            };
        }
        if done[0] && done[1] {
            return RunReport {
                outcome: Outcome::Success { termination_rounds: done_round },
                coverage,
                trace,
                rounds_run: round,
                final_positions: pos,
            };
        }
    }

    RunReport {
        outcome: Outcome::Timeout,
        coverage,
        trace,
        rounds_run: config.max_rounds,
        final_positions: pos,
    }
}
