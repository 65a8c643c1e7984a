//! The two agent programs, written as explicit state machines over local
//! perceptions.
//!
//! An agent sees only its current node's degree, the pebble there, whether
//! the other agent stands on an adjacent node, the port it last entered
//! through, its own local round counter, and `n`.  Each call to `step`
//! consumes one perception and yields one action.  Transitions that the
//! protocol performs "within" a round (entering a subroutine and issuing
//! its first move) are chained internally without consuming extra rounds;
//! a bounded micro-loop guards against cycles.
//!
//! The general-mode machine pairs with `pebbles::place_general`: one agent
//! wakes on a pebbled node and walks the pebbled trail toward its stop
//! node, pausing to notify the other agent on the way; the other wakes on
//! a bare node, watches for the notifier's periodic touches, answers with
//! a neighbor scan, and then enumerates walks until it stands on green.
//! The bipartite machine pairs with `pebbles::place_bipartite`: the marked
//! agent crawls the black trail until the agents sense each other, then
//! both run the same exploration sequence in lockstep from adjacent nodes.

use crate::graph::Port;
use crate::pebbles::PebbleColor;
use thiserror::Error;

/// What an agent learns at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Perception {
    /// Degree of the current node.
    pub degree: usize,
    /// Pebble at the current node, if any.
    pub pebble: Option<PebbleColor>,
    /// True when the other agent stands at distance exactly 1, whether it
    /// is awake, asleep, or terminated.
    pub other_agent_adjacent: bool,
    /// Port through which this node was last entered; `None` before the
    /// first move.
    pub entry_port: Option<Port>,
    /// Rounds since this agent woke, starting at 1.
    pub local_round: u64,
    /// Total number of nodes, known to both agents.
    pub n: usize,
}

/// One round's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    Move(Port),
    Terminate,
}

/// The machine observed something its contract rules out; surfacing it
/// beats looping silently.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("agent fault in state {state}: {detail}")]
pub struct AgentFault {
    pub state: &'static str,
    pub detail: String,
}

const MICRO_GUARD: usize = 256;

fn fault(state: &'static str, detail: impl Into<String>) -> AgentFault {
    AgentFault { state, detail: detail.into() }
}

fn entry_of(p: &Perception, state: &'static str) -> Result<Port, AgentFault> {
    p.entry_port.ok_or_else(|| fault(state, "no entry port recorded at a visited node"))
}

/// Continuation run once the notifier has confirmed the other agent is
/// awake.
#[derive(Debug, Clone, PartialEq, Eq)]
enum AfterNotify {
    /// Pop the recorded entry ports back to the search origin, then walk
    /// the blue trail to its end.
    ReturnWalk { trail: Vec<Option<Port>> },
    /// Walk the mixed-color trail onward from here; the first scan skips
    /// `skip`.  Exhausting a node's ports ends the walk there.
    ChainWalk { skip: Port },
}

/// Detector for the notifier's touch cadence: a 1-round sense episode
/// whose start lies exactly `2n+2` rounds after the previous 1-round
/// episode start, with no sensing strictly between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct TouchPattern {
    prev_sensed: bool,
    episode_start: u64,
    episode_len: u64,
    anchor: Option<u64>,
    armed: bool,
}

impl TouchPattern {
    /// Feeds one perception; true means the partner's cadence is
    /// confirmed and the answer scan should start this round.
    fn observe(&mut self, sensed: bool, round: u64, period: u64) -> bool {
        let mut launch = false;
        if sensed {
            if self.prev_sensed {
                self.episode_len += 1;
                self.armed = false;
            } else {
                self.episode_start = round;
                self.episode_len = 1;
                self.armed = self.anchor.is_some_and(|a| a + period == round);
            }
        } else if self.prev_sensed {
            if self.episode_len == 1 {
                launch = self.armed;
                self.anchor = Some(self.episode_start);
            } else {
                self.anchor = None;
            }
            self.armed = false;
        }
        self.prev_sensed = sensed;
        launch
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Gs {
    Boot,
    Done,
    /// Sweeping the leaves of a degree n-1 start node.
    HubHome {
        cursor: usize,
    },
    HubAway {
        cursor: usize,
    },
    /// Descending scan for the next red node; `trail` records entry ports
    /// since the search origin.
    RedSearchHome {
        cursor: i64,
        skip: Option<Port>,
        trail: Vec<Option<Port>>,
    },
    RedSearchAway {
        cursor: i64,
        skip: Option<Port>,
        trail: Vec<Option<Port>>,
    },
    /// Ascending scan for the next pebbled node along the blue trail.
    BlueSearchHome {
        cursor: usize,
        skip: Option<Port>,
    },
    BlueSearchAway {
        cursor: usize,
        skip: Option<Port>,
    },
    /// Scan performed while the other agent is adjacent, following the
    /// pebbled cluster out of its neighborhood; direction tracks the
    /// current node's pebble color.
    ClusterHome {
        descending: bool,
        cursor: i64,
        skip: Option<Port>,
    },
    ClusterAway {
        descending: bool,
        cursor: i64,
        skip: Option<Port>,
    },
    /// Waiting at the notify node, touching through `touch` every 2n+2
    /// rounds until the other agent stands adjacent.
    NotifyWait {
        touch: Port,
        waited: u64,
        after: AfterNotify,
    },
    /// One extra stationary round after mutual sensing, so the answering
    /// scan can confirm.
    NotifyLinger {
        after: AfterNotify,
    },
    NotifyOut {
        touch: Port,
        after: AfterNotify,
    },
    /// Popping recorded entry ports back to the search origin.
    ReturnWalk {
        trail: Vec<Option<Port>>,
    },
    /// Walk along pebbled nodes, each scan directed by the node's own
    /// color: red descending, blue ascending.  Exhausting the ports means
    /// the current node is the stop node.
    RouteWalkHome {
        descending: bool,
        cursor: i64,
        skip: Option<Port>,
    },
    RouteWalkAway {
        descending: bool,
        cursor: i64,
        skip: Option<Port>,
    },
    /// Ascending walk along blue nodes; exhausting the ports means the
    /// current node is the stop node.
    BlueEndHome {
        cursor: usize,
        skip: Option<Port>,
    },
    BlueEndAway {
        cursor: usize,
        skip: Option<Port>,
    },
    /// Bare-node agent watching for the notifier's touch cadence.
    Watch {
        pattern: TouchPattern,
    },
    /// Answer scan: 2-round probes of the home node's neighbors.
    ScanOut {
        cursor: usize,
    },
    ScanConfirm {
        cursor: usize,
    },
    ScanHome {
        cursor: usize,
    },
    /// Stationary 7n rounds while the notifier walks to its stop node.
    Rest {
        left: u64,
    },
    /// Depth-first enumeration of all port walks of length 1, 2, ... from
    /// the home node, terminating on the first green node occupied.
    Enumerate {
        frames: Vec<Frame>,
        target: usize,
        cursor: usize,
        pending: Option<Port>,
    },
}

/// One level of the enumeration walk: the port taken from the parent and
/// the entry port at the child (the way back).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frame {
    taken: Port,
    entry: Port,
}

/// General-mode agent program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralMachine {
    state: Gs,
}

impl Default for GeneralMachine {
    fn default() -> Self {
        Self::new()
    }
}

impl GeneralMachine {
    #[must_use]
    pub fn new() -> Self {
        GeneralMachine { state: Gs::Boot }
    }

    #[must_use]
    pub fn is_done(&self) -> bool {
        self.state == Gs::Done
    }

    /// Short name of the current phase, recorded in traces.
    #[must_use]
    pub fn label(&self) -> &'static str {
        match &self.state {
            Gs::Boot => "dispatch",
            Gs::Done => "terminated",
            Gs::HubHome { .. } | Gs::HubAway { .. } => "leaf-sweep",
            Gs::RedSearchHome { .. } | Gs::RedSearchAway { .. } => "red-search",
            Gs::BlueSearchHome { .. } | Gs::BlueSearchAway { .. } => "blue-search",
            Gs::ClusterHome { .. } | Gs::ClusterAway { .. } => "cluster-scan",
            Gs::NotifyWait { .. } => "notify-wait",
            Gs::NotifyLinger { .. } => "notify-linger",
            Gs::NotifyOut { .. } => "notify-touch",
            Gs::ReturnWalk { .. } => "return-walk",
            Gs::RouteWalkHome { .. } | Gs::RouteWalkAway { .. } => "route-walk",
            Gs::BlueEndHome { .. } | Gs::BlueEndAway { .. } => "blue-end",
            Gs::Watch { .. } => "watch",
            Gs::ScanOut { .. } | Gs::ScanHome { .. } => "scan",
            Gs::ScanConfirm { .. } => "scan-confirm",
            Gs::Rest { .. } => "rest",
            Gs::Enumerate { .. } => "enumerate",
        }
    }

    pub fn step(&mut self, p: &Perception) -> Result<Action, AgentFault> {
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > MICRO_GUARD {
                return Err(fault("micro-loop", "transition chain exceeded its bound"));
            }
            let state = std::mem::replace(&mut self.state, Gs::Done);
            match self.transition(state, p)? {
                Step::Emit(next, action) => {
                    self.state = next;
                    return Ok(action);
                }
                Step::Chain(next) => {
                    self.state = next;
                }
            }
        }
    }

    fn transition(&mut self, state: Gs, p: &Perception) -> Result<Step, AgentFault> {
        use PebbleColor::{Black, Blue, Green, Red};
        let n = p.n;
        let deg = p.degree;
        Ok(match state {
            Gs::Done => Step::Emit(Gs::Done, Action::Stay),
            Gs::Boot => {
                if n == 2 {
                    return Ok(Step::Emit(Gs::Done, Action::Terminate));
                }
                match p.pebble {
                    Some(Green) => Step::Emit(Gs::Done, Action::Terminate),
                    Some(Red) if deg == n - 1 => Step::Chain(Gs::HubHome { cursor: 1 }),
                    None if deg == n - 1 => Step::Chain(Gs::HubHome { cursor: 0 }),
                    Some(Red) if p.other_agent_adjacent => Step::Chain(Gs::ClusterHome {
                        descending: true,
                        cursor: deg as i64 - 1,
                        skip: None,
                    }),
                    Some(Blue) if p.other_agent_adjacent => {
                        Step::Chain(Gs::ClusterHome { descending: false, cursor: 0, skip: None })
                    }
                    Some(Red) => Step::Chain(Gs::RedSearchHome {
                        cursor: deg as i64 - 1,
                        skip: None,
                        trail: vec![None],
                    }),
                    Some(Blue) => Step::Chain(Gs::BlueSearchHome { cursor: 0, skip: None }),
                    None => Step::Chain(Gs::Watch { pattern: TouchPattern::default() }),
                    Some(Black) => {
                        return Err(fault("dispatch", "black pebble outside bipartite mode"))
                    }
                }
            }

            Gs::HubHome { cursor } => {
                if cursor >= deg {
                    return Err(fault("leaf-sweep", "no green leaf found"));
                }
                Step::Emit(Gs::HubAway { cursor }, Action::Move(cursor))
            }
            Gs::HubAway { cursor } => match p.pebble {
                Some(Green) => Step::Emit(Gs::Done, Action::Terminate),
                Some(Red) => {
                    let e = entry_of(p, "leaf-sweep")?;
                    Step::Emit(Gs::HubHome { cursor: cursor + 2 }, Action::Move(e))
                }
                _ => {
                    let e = entry_of(p, "leaf-sweep")?;
                    Step::Emit(Gs::HubHome { cursor: cursor + 1 }, Action::Move(e))
                }
            },

            Gs::RedSearchHome { mut cursor, skip, trail } => {
                if skip.map(|s| s as i64) == Some(cursor) {
                    cursor -= 1;
                }
                if cursor < 0 {
                    return Err(fault("red-search", "ports exhausted without a red neighbor"));
                }
                let port = cursor as usize;
                Step::Emit(Gs::RedSearchAway { cursor, skip, trail }, Action::Move(port))
            }
            Gs::RedSearchAway { cursor, skip, trail } => {
                let e = entry_of(p, "red-search")?;
                match p.pebble {
                    Some(Red) if p.other_agent_adjacent => {
                        let touch = cursor as usize;
                        Step::Emit(
                            Gs::NotifyWait {
                                touch,
                                waited: 0,
                                after: AfterNotify::ReturnWalk { trail },
                            },
                            Action::Move(e),
                        )
                    }
                    Some(Red) => {
                        let mut trail = trail;
                        trail.push(Some(e));
                        Step::Chain(Gs::RedSearchHome {
                            cursor: deg as i64 - 1,
                            skip: Some(e),
                            trail,
                        })
                    }
                    _ => Step::Emit(
                        Gs::RedSearchHome { cursor: cursor - 1, skip, trail },
                        Action::Move(e),
                    ),
                }
            }

            Gs::BlueSearchHome { mut cursor, skip } => {
                if skip == Some(cursor) {
                    cursor += 1;
                }
                if cursor >= deg {
                    return Err(fault("blue-search", "ports exhausted without a pebbled neighbor"));
                }
                Step::Emit(Gs::BlueSearchAway { cursor, skip }, Action::Move(cursor))
            }
            Gs::BlueSearchAway { cursor, skip } => {
                let e = entry_of(p, "blue-search")?;
                match p.pebble {
                    Some(color @ (Red | Blue)) if p.other_agent_adjacent => {
                        let descending = color == Red;
                        Step::Chain(Gs::ClusterHome {
                            descending,
                            cursor: if descending { deg as i64 - 1 } else { 0 },
                            skip: Some(e),
                        })
                    }
                    Some(Blue) => Step::Chain(Gs::BlueSearchHome { cursor: 0, skip: Some(e) }),
                    Some(Red) => Step::Chain(Gs::RedSearchHome {
                        cursor: deg as i64 - 1,
                        skip: Some(e),
                        trail: vec![Some(e)],
                    }),
                    _ => {
                        Step::Emit(Gs::BlueSearchHome { cursor: cursor + 1, skip }, Action::Move(e))
                    }
                }
            }

            Gs::ClusterHome { descending, mut cursor, skip } => {
                if skip.map(|s| s as i64) == Some(cursor) {
                    cursor += if descending { -1 } else { 1 };
                }
                let out_of_range = if descending { cursor < 0 } else { cursor >= deg as i64 };
                if out_of_range {
                    return Err(fault(
                        "cluster-scan",
                        "ports exhausted without a pebbled neighbor",
                    ));
                }
                let port = cursor as usize;
                Step::Emit(Gs::ClusterAway { descending, cursor, skip }, Action::Move(port))
            }
            Gs::ClusterAway { descending, cursor, skip } => {
                let e = entry_of(p, "cluster-scan")?;
                match p.pebble {
                    Some(color @ (Red | Blue)) if p.other_agent_adjacent => {
                        let next_desc = color == Red;
                        Step::Chain(Gs::ClusterHome {
                            descending: next_desc,
                            cursor: if next_desc { deg as i64 - 1 } else { 0 },
                            skip: Some(e),
                        })
                    }
                    Some(Red | Blue) => Step::Emit(
                        Gs::NotifyWait {
                            touch: e,
                            waited: 0,
                            after: AfterNotify::ChainWalk { skip: e },
                        },
                        Action::Stay,
                    ),
                    _ => {
                        let next = cursor + if descending { -1 } else { 1 };
                        Step::Emit(
                            Gs::ClusterHome { descending, cursor: next, skip },
                            Action::Move(e),
                        )
                    }
                }
            }

            Gs::NotifyWait { touch, waited, after } => {
                if p.other_agent_adjacent {
                    Step::Emit(Gs::NotifyLinger { after }, Action::Stay)
                } else if waited == 2 * n as u64 {
                    Step::Emit(Gs::NotifyOut { touch, after }, Action::Move(touch))
                } else {
                    Step::Emit(Gs::NotifyWait { touch, waited: waited + 1, after }, Action::Stay)
                }
            }
            Gs::NotifyOut { touch, after } => {
                let e = entry_of(p, "notify-touch")?;
                Step::Emit(Gs::NotifyWait { touch, waited: 0, after }, Action::Move(e))
            }
            Gs::NotifyLinger { after } => match after {
                AfterNotify::ReturnWalk { trail } => Step::Chain(Gs::ReturnWalk { trail }),
                AfterNotify::ChainWalk { skip } => {
                    let descending = match p.pebble {
                        Some(Red) => true,
                        Some(Blue) => false,
                        _ => return Err(fault("notify-linger", "standing node lost its pebble")),
                    };
                    Step::Chain(Gs::RouteWalkHome {
                        descending,
                        cursor: if descending { deg as i64 - 1 } else { 0 },
                        skip: Some(skip),
                    })
                }
            },

            Gs::ReturnWalk { mut trail } => {
                if trail.len() > 1 {
                    match trail.pop() {
                        Some(Some(e)) => Step::Emit(Gs::ReturnWalk { trail }, Action::Move(e)),
                        _ => return Err(fault("return-walk", "recorded trail missing an entry")),
                    }
                } else {
                    let base =
                        trail.pop().ok_or_else(|| fault("return-walk", "recorded trail empty"))?;
                    Step::Chain(Gs::BlueEndHome { cursor: 0, skip: base })
                }
            }

            Gs::RouteWalkHome { descending, mut cursor, skip } => {
                if skip.map(|s| s as i64) == Some(cursor) {
                    cursor += if descending { -1 } else { 1 };
                }
                let out_of_range = if descending { cursor < 0 } else { cursor >= deg as i64 };
                if out_of_range {
                    return Ok(Step::Emit(Gs::Done, Action::Terminate));
                }
                let port = cursor as usize;
                Step::Emit(Gs::RouteWalkAway { descending, cursor, skip }, Action::Move(port))
            }
            Gs::RouteWalkAway { descending, cursor, skip } => {
                let e = entry_of(p, "route-walk")?;
                match p.pebble {
                    Some(color @ (Red | Blue)) => {
                        let next_desc = color == Red;
                        Step::Chain(Gs::RouteWalkHome {
                            descending: next_desc,
                            cursor: if next_desc { deg as i64 - 1 } else { 0 },
                            skip: Some(e),
                        })
                    }
                    _ => {
                        let next = cursor + if descending { -1 } else { 1 };
                        Step::Emit(
                            Gs::RouteWalkHome { descending, cursor: next, skip },
                            Action::Move(e),
                        )
                    }
                }
            }

            Gs::BlueEndHome { mut cursor, skip } => {
                if skip == Some(cursor) {
                    cursor += 1;
                }
                if cursor >= deg {
                    return Ok(Step::Emit(Gs::Done, Action::Terminate));
                }
                Step::Emit(Gs::BlueEndAway { cursor, skip }, Action::Move(cursor))
            }
            Gs::BlueEndAway { cursor, skip } => match p.pebble {
                Some(Blue) => {
                    let e = entry_of(p, "blue-end")?;
                    Step::Chain(Gs::BlueEndHome { cursor: 0, skip: Some(e) })
                }
                _ => {
                    let e = entry_of(p, "blue-end")?;
                    Step::Emit(Gs::BlueEndHome { cursor: cursor + 1, skip }, Action::Move(e))
                }
            },

            Gs::Watch { mut pattern } => {
                let period = 2 * n as u64 + 2;
                if pattern.observe(p.other_agent_adjacent, p.local_round, period) {
                    Step::Chain(Gs::ScanHome { cursor: 0 })
                } else {
                    Step::Emit(Gs::Watch { pattern }, Action::Stay)
                }
            }
            Gs::ScanHome { cursor } => {
                if cursor >= deg {
                    // Fruitless answer scan: return to watching with the
                    // cadence detector reset.
                    let pattern = TouchPattern {
                        prev_sensed: p.other_agent_adjacent,
                        ..TouchPattern::default()
                    };
                    Step::Emit(Gs::Watch { pattern }, Action::Stay)
                } else {
                    Step::Emit(Gs::ScanOut { cursor }, Action::Move(cursor))
                }
            }
            Gs::ScanOut { cursor } => {
                if p.other_agent_adjacent {
                    Step::Emit(Gs::ScanConfirm { cursor }, Action::Stay)
                } else {
                    let e = entry_of(p, "scan")?;
                    Step::Emit(Gs::ScanHome { cursor: cursor + 1 }, Action::Move(e))
                }
            }
            Gs::ScanConfirm { cursor } => {
                let e = entry_of(p, "scan-confirm")?;
                if p.other_agent_adjacent {
                    Step::Emit(Gs::Rest { left: 7 * n as u64 }, Action::Move(e))
                } else {
                    Step::Emit(Gs::ScanHome { cursor: cursor + 1 }, Action::Move(e))
                }
            }
            Gs::Rest { left } => {
                if left == 0 {
                    Step::Chain(Gs::Enumerate {
                        frames: Vec::new(),
                        target: 1,
                        cursor: 0,
                        pending: None,
                    })
                } else {
                    Step::Emit(Gs::Rest { left: left - 1 }, Action::Stay)
                }
            }

            Gs::Enumerate { mut frames, mut target, mut cursor, pending } => {
                if p.pebble == Some(Green) {
                    return Ok(Step::Emit(Gs::Done, Action::Terminate));
                }
                if let Some(taken) = pending {
                    let entry = entry_of(p, "enumerate")?;
                    frames.push(Frame { taken, entry });
                    cursor = 0;
                }
                if frames.len() == target || cursor >= deg {
                    if let Some(f) = frames.pop() {
                        return Ok(Step::Emit(
                            Gs::Enumerate { frames, target, cursor: f.taken + 1, pending: None },
                            Action::Move(f.entry),
                        ));
                    }
                    // Back at the origin with every walk of this length
                    // done: lengthen the walks.
                    target += 1;
                    cursor = 0;
                    if target > n {
                        return Err(fault("enumerate", "no green node within walk length n"));
                    }
                }
                Step::Emit(
                    Gs::Enumerate { frames, target, cursor, pending: Some(cursor) },
                    Action::Move(cursor),
                )
            }
        })
    }
}

enum Step {
    /// Install the state and emit the action for this round.
    Emit(Gs, Action),
    /// Install the state and continue within the same round.
    Chain(Gs),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Bs {
    Boot,
    Done,
    /// Marked agent walking the black trail, probing ascending.
    CrawlHome {
        cursor: usize,
        skip: Option<Port>,
    },
    CrawlAway {
        cursor: usize,
        skip: Option<Port>,
    },
    /// Marked agent's first move in the adjacent configuration; the meet
    /// port is learned on arrival.
    Depart,
    /// Marked agent waiting one hop past the meet node, touching through
    /// `meet` every 2n+2 rounds.
    Settle {
        meet: Port,
        waited: u64,
    },
    SettleOut {
        meet: Port,
    },
    /// Unmarked agent waiting for the first sense transition.
    WatchAdjacent,
    WatchClear,
    /// Unmarked agent's answer scan, wrapping until mutual sensing.
    ScanOut {
        cursor: usize,
    },
    ScanHome {
        cursor: usize,
    },
    /// Home round between the handshake and the first sequence move.
    Arm,
    /// Lockstep run of the exploration sequence; the first step treats the
    /// entry port as 0.
    Run {
        idx: usize,
    },
}

/// Bipartite-mode agent program; both agents carry the same offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteMachine {
    offsets: Vec<usize>,
    state: Bs,
}

impl BipartiteMachine {
    #[must_use]
    pub fn new(offsets: Vec<usize>) -> Self {
        BipartiteMachine { offsets, state: Bs::Boot }
    }

    #[must_use]
    pub fn is_done(&self) -> bool {
        self.state == Bs::Done
    }

    /// Short name of the current phase, recorded in traces.
    #[must_use]
    pub fn label(&self) -> &'static str {
        match &self.state {
            Bs::Boot => "dispatch",
            Bs::Done => "terminated",
            Bs::CrawlHome { .. } | Bs::CrawlAway { .. } => "crawl",
            Bs::Depart => "depart",
            Bs::Settle { .. } => "settle",
            Bs::SettleOut { .. } => "settle-touch",
            Bs::WatchAdjacent | Bs::WatchClear => "watch",
            Bs::ScanOut { .. } | Bs::ScanHome { .. } => "scan",
            Bs::Arm => "arm",
            Bs::Run { .. } => "run",
        }
    }

    pub fn step(&mut self, p: &Perception) -> Result<Action, AgentFault> {
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > MICRO_GUARD {
                return Err(fault("micro-loop", "transition chain exceeded its bound"));
            }
            let state = std::mem::replace(&mut self.state, Bs::Done);
            match self.transition(state, p)? {
                BStep::Emit(next, action) => {
                    self.state = next;
                    return Ok(action);
                }
                BStep::Chain(next) => {
                    self.state = next;
                }
            }
        }
    }

    fn transition(&mut self, state: Bs, p: &Perception) -> Result<BStep, AgentFault> {
        use PebbleColor::{Black, Red};
        let n = p.n;
        let deg = p.degree;
        Ok(match state {
            Bs::Done => BStep::Emit(Bs::Done, Action::Stay),
            Bs::Boot => {
                if n == 2 {
                    return Ok(BStep::Emit(Bs::Done, Action::Terminate));
                }
                match (p.pebble, p.other_agent_adjacent) {
                    (Some(Red), true) => BStep::Emit(Bs::Depart, Action::Move(1)),
                    (Some(Black), true) => BStep::Emit(Bs::Depart, Action::Move(0)),
                    (Some(Black), false) => BStep::Chain(Bs::CrawlHome { cursor: 0, skip: None }),
                    (Some(Red), false) => {
                        return Err(fault("dispatch", "red marker with no agent adjacent"))
                    }
                    (Some(_), _) => {
                        return Err(fault("dispatch", "foreign pebble color in bipartite mode"))
                    }
                    (None, true) => BStep::Emit(Bs::WatchAdjacent, Action::Stay),
                    (None, false) => BStep::Emit(Bs::WatchClear, Action::Stay),
                }
            }

            Bs::CrawlHome { mut cursor, skip } => {
                if skip == Some(cursor) {
                    cursor += 1;
                }
                if cursor >= deg {
                    return Err(fault("crawl", "ports exhausted without trail or partner"));
                }
                BStep::Emit(Bs::CrawlAway { cursor, skip }, Action::Move(cursor))
            }
            Bs::CrawlAway { cursor, skip } => {
                let e = entry_of(p, "crawl")?;
                if p.other_agent_adjacent {
                    // The partner's node is two hops from the trail node we
                    // retreat to; the node we stand on now is the meeting
                    // point we will touch through.
                    BStep::Emit(Bs::Settle { meet: cursor, waited: 0 }, Action::Move(e))
                } else if p.pebble == Some(Black) {
                    BStep::Chain(Bs::CrawlHome { cursor: 0, skip: Some(e) })
                } else {
                    BStep::Emit(Bs::CrawlHome { cursor: cursor + 1, skip }, Action::Move(e))
                }
            }

            Bs::Depart => {
                let e = entry_of(p, "depart")?;
                BStep::Chain(Bs::Settle { meet: e, waited: 0 })
            }
            Bs::Settle { meet, waited } => {
                if p.other_agent_adjacent {
                    BStep::Emit(Bs::Arm, Action::Move(meet))
                } else if waited == 2 * n as u64 {
                    BStep::Emit(Bs::SettleOut { meet }, Action::Move(meet))
                } else {
                    BStep::Emit(Bs::Settle { meet, waited: waited + 1 }, Action::Stay)
                }
            }
            Bs::SettleOut { meet } => {
                let e = entry_of(p, "settle-touch")?;
                BStep::Emit(Bs::Settle { meet, waited: 0 }, Action::Move(e))
            }

            Bs::WatchAdjacent => {
                if p.other_agent_adjacent {
                    BStep::Emit(Bs::WatchAdjacent, Action::Stay)
                } else {
                    BStep::Chain(Bs::ScanHome { cursor: 0 })
                }
            }
            Bs::WatchClear => {
                if p.other_agent_adjacent {
                    BStep::Chain(Bs::ScanHome { cursor: 0 })
                } else {
                    BStep::Emit(Bs::WatchClear, Action::Stay)
                }
            }
            Bs::ScanHome { mut cursor } => {
                if cursor >= deg {
                    cursor = 0;
                }
                BStep::Emit(Bs::ScanOut { cursor }, Action::Move(cursor))
            }
            Bs::ScanOut { cursor } => {
                let e = entry_of(p, "scan")?;
                if p.other_agent_adjacent {
                    BStep::Emit(Bs::Arm, Action::Move(e))
                } else {
                    BStep::Emit(Bs::ScanHome { cursor: cursor + 1 }, Action::Move(e))
                }
            }

            Bs::Arm => BStep::Chain(Bs::Run { idx: 0 }),
            Bs::Run { idx } => {
                if idx == self.offsets.len() {
                    return Ok(BStep::Emit(Bs::Done, Action::Terminate));
                }
                let entry = if idx == 0 { 0 } else { entry_of(p, "run")? };
                let port = (entry + self.offsets[idx]) % deg;
                BStep::Emit(Bs::Run { idx: idx + 1 }, Action::Move(port))
            }
        })
    }
}

enum BStep {
    Emit(Bs, Action),
    Chain(Bs),
}

#[cfg(test)]
mod tests {
    use super::*;
    use PebbleColor::{Black, Green, Red};

    fn percept(
        degree: usize,
        pebble: Option<PebbleColor>,
        adjacent: bool,
        entry: Option<Port>,
        local_round: u64,
        n: usize,
    ) -> Perception {
        Perception {
            degree,
            pebble,
            other_agent_adjacent: adjacent,
            entry_port: entry,
            local_round,
            n,
        }
    }

    /// Red start on a degree n-1 node: the sweep starts at port 1 and
    /// terminates on the green leaf.
    #[test]
    fn hub_sweep_with_marker_skips_port_zero() {
        let mut m = GeneralMachine::new();
        let n = 4;
        assert_eq!(m.step(&percept(3, Some(Red), true, None, 1, n)).unwrap(), Action::Move(1));
        assert_eq!(m.step(&percept(1, None, false, Some(0), 2, n)).unwrap(), Action::Move(0));
        assert_eq!(m.step(&percept(3, Some(Red), true, Some(1), 3, n)).unwrap(), Action::Move(2));
        assert_eq!(
            m.step(&percept(1, Some(Green), false, Some(0), 4, n)).unwrap(),
            Action::Terminate
        );
        assert!(m.is_done());
    }

    /// Unmarked start on a degree n-1 node: a red leaf makes the sweep
    /// skip the following port.
    #[test]
    fn hub_sweep_red_leaf_skips_next_port() {
        let mut m = GeneralMachine::new();
        let n = 4;
        assert_eq!(m.step(&percept(3, None, false, None, 1, n)).unwrap(), Action::Move(0));
        assert_eq!(m.step(&percept(1, Some(Red), false, Some(0), 2, n)).unwrap(), Action::Move(0));
        // Port 1 is skipped because of the red leaf.
        assert_eq!(m.step(&percept(3, None, false, Some(0), 3, n)).unwrap(), Action::Move(2));
        assert_eq!(
            m.step(&percept(1, Some(Green), false, Some(0), 4, n)).unwrap(),
            Action::Terminate
        );
    }

    #[test]
    fn two_node_and_green_starts_terminate_at_once() {
        let mut a = GeneralMachine::new();
        assert_eq!(a.step(&percept(1, None, true, None, 1, 2)).unwrap(), Action::Terminate);
        let mut b = GeneralMachine::new();
        assert_eq!(b.step(&percept(2, Some(Green), false, None, 1, 5)).unwrap(), Action::Terminate);
        let mut c = GeneralMachine::new();
        assert!(c.step(&percept(2, Some(Black), false, None, 1, 5)).is_err());
    }

    /// The watcher ignores isolated sensing and launches its scan only on
    /// two 1-round episodes exactly 2n+2 rounds apart.
    #[test]
    fn watcher_launches_on_touch_cadence() {
        let n = 4;
        let period = 2 * n as u64 + 2;
        let mut m = GeneralMachine::new();
        let deg = 2;
        let mut round = 1u64;
        let mut feed = |m: &mut GeneralMachine, sensed: bool, entry: Option<Port>| {
            let a = m.step(&percept(deg, None, sensed, entry, round, n)).unwrap();
            round += 1;
            a
        };
        // A stray 2-round episode resets the detector.
        assert_eq!(feed(&mut m, false, None), Action::Stay);
        assert_eq!(feed(&mut m, true, None), Action::Stay);
        assert_eq!(feed(&mut m, true, None), Action::Stay);
        assert_eq!(feed(&mut m, false, None), Action::Stay);
        // First touch-like episode at round 5.
        assert_eq!(feed(&mut m, true, None), Action::Stay);
        for _ in 0..period - 1 {
            assert_eq!(feed(&mut m, false, None), Action::Stay);
        }
        // Second episode lands exactly one period after the first.
        assert_eq!(feed(&mut m, true, None), Action::Stay);
        // The clear round that ends it launches the scan.
        assert_eq!(feed(&mut m, false, None), Action::Move(0));
        // Stand senses the partner: linger, confirm, then home into rest.
        assert_eq!(feed(&mut m, true, Some(0)), Action::Stay);
        assert_eq!(feed(&mut m, true, Some(0)), Action::Move(0));
        assert_eq!(m.label(), "rest");
        for _ in 0..7 * n as u64 {
            assert_eq!(feed(&mut m, false, Some(0)), Action::Stay);
        }
        // Rest over: the enumeration's first walk starts.
        assert_eq!(feed(&mut m, false, Some(0)), Action::Move(0));
        assert_eq!(m.label(), "enumerate");
    }

    /// An episode at the right spacing but two rounds long does not
    /// launch the scan.
    #[test]
    fn watcher_rejects_long_second_episode() {
        let n = 4;
        let period = 2 * n as u64 + 2;
        let mut m = GeneralMachine::new();
        let mut round = 1u64;
        let mut feed = |m: &mut GeneralMachine, sensed: bool| {
            let a = m.step(&percept(2, None, sensed, None, round, n)).unwrap();
            round += 1;
            a
        };
        assert_eq!(feed(&mut m, true), Action::Stay);
        for _ in 0..period - 1 {
            assert_eq!(feed(&mut m, false), Action::Stay);
        }
        assert_eq!(feed(&mut m, true), Action::Stay);
        assert_eq!(feed(&mut m, true), Action::Stay);
        assert_eq!(feed(&mut m, false), Action::Stay);
        assert_eq!(m.label(), "watch");
    }

    /// Depth-first walk enumeration on a 3-node path rooted at an end:
    /// the walks run in lexicographic order per length and stop on green.
    #[test]
    fn enumeration_visits_in_walk_order() {
        let n = 3;
        let mut m = GeneralMachine::new();
        // Reach the enumeration through the shortest legitimate prefix:
        // touch cadence, scan, confirm, rest.
        let period = 2 * n as u64 + 2;
        let mut round = 1u64;
        let mut feed = |m: &mut GeneralMachine,
                        pebble: Option<PebbleColor>,
                        sensed: bool,
                        deg: usize,
                        entry: Option<Port>| {
            let a = m.step(&percept(deg, pebble, sensed, entry, round, n)).unwrap();
            round += 1;
            a
        };
        assert_eq!(feed(&mut m, None, true, 1, None), Action::Stay);
        for _ in 0..period - 1 {
            assert_eq!(feed(&mut m, None, false, 1, None), Action::Stay);
        }
        assert_eq!(feed(&mut m, None, true, 1, None), Action::Stay);
        assert_eq!(feed(&mut m, None, false, 1, None), Action::Move(0));
        assert_eq!(feed(&mut m, None, true, 2, Some(0)), Action::Stay);
        assert_eq!(feed(&mut m, None, true, 2, Some(0)), Action::Move(0));
        for _ in 0..7 * n as u64 {
            assert_eq!(feed(&mut m, None, false, 1, Some(0)), Action::Stay);
        }
        // Enumeration from the path end (degree 1): length-1 walk visits
        // the middle node and returns.
        assert_eq!(feed(&mut m, None, false, 1, Some(0)), Action::Move(0));
        assert_eq!(feed(&mut m, None, false, 2, Some(0)), Action::Move(0));
        // Length-2 walks: 00 backtracks through the start, then 01 finds
        // the green far end.
        assert_eq!(feed(&mut m, None, false, 1, Some(0)), Action::Move(0));
        assert_eq!(feed(&mut m, None, false, 2, Some(0)), Action::Move(0));
        assert_eq!(feed(&mut m, None, false, 1, Some(0)), Action::Move(0));
        assert_eq!(feed(&mut m, None, false, 2, Some(0)), Action::Move(1));
        assert_eq!(feed(&mut m, Some(Green), false, 2, Some(1)), Action::Terminate);
        assert!(m.is_done());
    }

    /// Marked bipartite agent crawls the black trail, skipping its entry,
    /// and settles two hops from the sensed partner.
    #[test]
    fn bipartite_crawl_and_settle() {
        let n = 4;
        let mut m = BipartiteMachine::new(vec![0, 1, 0]);
        let mut round = 1u64;
        let mut feed = |m: &mut BipartiteMachine,
                        deg: usize,
                        pebble: Option<PebbleColor>,
                        sensed: bool,
                        entry: Option<Port>| {
            let a = m.step(&percept(deg, pebble, sensed, entry, round, n)).unwrap();
            round += 1;
            a
        };
        // At the marked start: probe port 0, bounce off a bare node.
        assert_eq!(feed(&mut m, 2, Some(Black), false, None), Action::Move(0));
        assert_eq!(feed(&mut m, 2, None, false, Some(1)), Action::Move(1));
        // Port 1 finds the next trail node; the crawl continues from it,
        // skipping the entry port.
        assert_eq!(feed(&mut m, 2, Some(Black), false, None), Action::Move(1));
        assert_eq!(feed(&mut m, 2, Some(Black), false, Some(0)), Action::Move(1));
        // The probe through port 1 stands next to the partner: retreat.
        assert_eq!(feed(&mut m, 2, None, true, Some(0)), Action::Move(0));
        assert_eq!(m.label(), "settle");
        // 2n quiet rounds, then a touch through the meet port and back.
        for _ in 0..2 * n as u64 {
            assert_eq!(feed(&mut m, 2, Some(Black), false, Some(1)), Action::Stay);
        }
        assert_eq!(feed(&mut m, 2, Some(Black), false, Some(1)), Action::Move(1));
        assert_eq!(feed(&mut m, 2, None, false, Some(0)), Action::Move(0));
        // A scan stand appears adjacent: move to the meet node, then run
        // the sequence with the entry port taken as 0.
        assert_eq!(feed(&mut m, 2, Some(Black), true, Some(1)), Action::Move(1));
        assert_eq!(feed(&mut m, 2, None, false, Some(0)), Action::Move(0));
        assert_eq!(m.label(), "run");
        assert_eq!(feed(&mut m, 2, Some(Black), false, Some(1)), Action::Move(0));
        assert_eq!(feed(&mut m, 2, None, false, Some(1)), Action::Move(1));
        assert_eq!(feed(&mut m, 3, None, false, Some(2)), Action::Terminate);
    }

    /// Unmarked bipartite agent: first sense transition launches the
    /// answer scan, mutual sensing arms the sequence run.
    #[test]
    fn bipartite_unmarked_scan_handshake() {
        let n = 4;
        let mut m = BipartiteMachine::new(vec![1, 0]);
        let mut round = 1u64;
        let mut feed = |m: &mut BipartiteMachine,
                        pebble: Option<PebbleColor>,
                        sensed: bool,
                        entry: Option<Port>| {
            let a = m.step(&percept(2, pebble, sensed, entry, round, n)).unwrap();
            round += 1;
            a
        };
        assert_eq!(feed(&mut m, None, false, None), Action::Stay);
        assert_eq!(feed(&mut m, None, false, None), Action::Stay);
        // First sense: scan launches the same round.
        assert_eq!(feed(&mut m, None, true, None), Action::Move(0));
        // The stand is clear: bounce home and probe the next port.
        assert_eq!(feed(&mut m, None, false, Some(0)), Action::Move(0));
        assert_eq!(feed(&mut m, None, false, Some(0)), Action::Move(1));
        // Mutual sense at the stand: retreat, then run.
        assert_eq!(feed(&mut m, None, true, Some(1)), Action::Move(1));
        assert_eq!(feed(&mut m, None, false, Some(0)), Action::Move(1));
        assert_eq!(m.label(), "run");
    }

    #[test]
    fn bipartite_two_node_guard() {
        let mut m = BipartiteMachine::new(vec![0]);
        assert_eq!(m.step(&percept(1, Some(Red), true, None, 1, 2)).unwrap(), Action::Terminate);
    }
}
