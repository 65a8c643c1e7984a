//! Role assignment and pebble placement.
//!
//! Placement happens before either agent wakes: a helper walks the graph,
//! decides which designated node plays the waiter and which the initiator,
//! and drops colored pebbles that the anonymous agents later read as a
//! routing overlay.  Colors mean, by agent convention:
//!
//! * green: terminate here;
//! * red: the next hop is found by scanning ports in descending order;
//! * blue: the next hop is found by scanning ports in ascending order;
//! * black: marks the meeting route in bipartite mode.
//!
//! The waiter's node never carries a pebble outside the hub cases, so the
//! initiator can recognize it by absence while walking pebbled routes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bfs::{decompose, last_visited, DecomposeError, Decomposition};
use crate::graph::{Graph, Node, Port};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PebbleColor {
    Red,
    Blue,
    Green,
    Black,
}

/// At most one pebble per node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PebbleMap {
    map: BTreeMap<Node, PebbleColor>,
}

impl PebbleMap {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, node: Node, color: PebbleColor) -> Result<(), PlacementError> {
        if self.map.insert(node, color).is_some() {
            return Err(PlacementError::Overlap { node });
        }
        Ok(())
    }

    #[must_use]
    pub fn at(&self, node: Node) -> Option<PebbleColor> {
        self.map.get(&node).copied()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, PebbleColor)> + '_ {
        self.map.iter().map(|(&n, &c)| (n, c))
    }

    /// Number of distinct colors in use.
    #[must_use]
    pub fn palette_size(&self) -> usize {
        let mut colors: Vec<PebbleColor> = self.map.values().copied().collect();
        colors.sort_by_key(|c| *c as u8);
        colors.dedup();
        colors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlacementError {
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error("two pebbles assigned to node {node}")]
    Overlap { node: Node },
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("every route to the exploration target crosses the waiter's node")]
    RouteThroughWaiter,
}

/// Which designated node waits and which walks first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolePair {
    /// The node whose agent stands by until signaled (x).
    pub waiter: Node,
    /// The node whose agent walks the pebbled route (y).
    pub initiator: Node,
    /// True when the input order was reversed to obtain this pair.
    pub swapped: bool,
}

/// Decides roles for a designated pair `(a, b)`.
///
/// `a` is the waiter unless it sits on every shortest path from `b` to the
/// last-visited node of the exploration rooted at `a`; blocking that route
/// would strand the initiator, so the roles flip.
pub fn assign_roles(g: &Graph, a: Node, b: Node) -> Result<RolePair, DecomposeError> {
    if a == b {
        return Err(DecomposeError::SameNode { node: a });
    }
    let z_a = last_visited(g, a);
    if g.on_every_shortest_path(b, z_a, a) {
        Ok(RolePair { waiter: b, initiator: a, swapped: true })
    } else {
        Ok(RolePair { waiter: a, initiator: b, swapped: false })
    }
}

/// Which placement rule produced a general-mode overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementCase {
    /// Two nodes: no pebbles, both agents stop at wake-up.
    TwoNodes,
    /// The initiator's node sees every other node.
    HubInitiator,
    /// Only the waiter's node sees every other node.
    HubWaiter,
    /// The initiator already stands on the exploration target.
    InitiatorAtTarget,
    /// The waiter's node touches the initiator's route.
    WaiterTouchesRoute,
    /// The two routes share only their common start.
    RoutesMeetOnlyAtStart,
    /// The two routes share a segment past their common start.
    RoutesShareSegment,
}

/// Complete general-mode placement.
#[derive(Debug, Clone)]
pub struct GeneralPlacement {
    pub pebbles: PebbleMap,
    pub roles: RolePair,
    pub case: PlacementCase,
    /// Present for the route-following cases.
    pub decomp: Option<Decomposition>,
    /// True when the waiter's own node is the green terminal: the waiter
    /// then stops at wake-up and the initiator's signal goes unanswered.
    pub green_on_waiter: bool,
}

/// Places pebbles for the general gathering protocol.
pub fn place_general(g: &Graph, a: Node, b: Node) -> Result<GeneralPlacement, PlacementError> {
    let roles = assign_roles(g, a, b)?;
    let n = g.n();
    let (x, y) = (roles.waiter, roles.initiator);
    if n == 2 {
        return Ok(GeneralPlacement {
            pebbles: PebbleMap::new(),
            roles,
            case: PlacementCase::TwoNodes,
            decomp: None,
            green_on_waiter: false,
        });
    }
    let mut pebbles = PebbleMap::new();
    if g.deg(y) == n - 1 {
        hub_overlay(g, &mut pebbles, y, x)?;
        pebbles.place(x, PebbleColor::Green)?;
        return Ok(GeneralPlacement {
            pebbles,
            roles,
            case: PlacementCase::HubInitiator,
            decomp: None,
            green_on_waiter: false,
        });
    }
    if g.deg(x) == n - 1 {
        hub_overlay(g, &mut pebbles, x, y)?;
        pebbles.place(y, PebbleColor::Green)?;
        return Ok(GeneralPlacement {
            pebbles,
            roles,
            case: PlacementCase::HubWaiter,
            decomp: None,
            green_on_waiter: false,
        });
    }

    let d = decompose(g, x, y)?;
    if d.avoidance_failed {
        return Err(PlacementError::RouteThroughWaiter);
    }
    let case;
    if y == d.target {
        case = PlacementCase::InitiatorAtTarget;
        for &v in d.waiter_route.nodes() {
            if v != x {
                pebbles.place(v, PebbleColor::Red)?;
            }
        }
    } else if d.route.nodes().iter().any(|&v| g.adjacent(x, v)) {
        case = PlacementCase::WaiterTouchesRoute;
        pebbles.place(d.target, PebbleColor::Red)?;
        let nodes = d.route.nodes();
        for i in 0..nodes.len() - 1 {
            let v = nodes[i];
            let next = nodes[i + 1];
            let color = match g.port_towards(v, x) {
                None => PebbleColor::Blue,
                Some(px) => {
                    let pn = g.port_towards(v, next).expect("route nodes are adjacent");
                    if pn < px {
                        PebbleColor::Blue
                    } else {
                        PebbleColor::Red
                    }
                }
            };
            pebbles.place(v, color)?;
        }
    } else if d.shared.len() == 1 {
        case = PlacementCase::RoutesMeetOnlyAtStart;
        for &v in d.waiter_route.nodes() {
            if v != x {
                pebbles.place(v, PebbleColor::Red)?;
            }
        }
        for &v in d.route.nodes() {
            if v != y {
                pebbles.place(v, PebbleColor::Blue)?;
            }
        }
    } else {
        case = PlacementCase::RoutesShareSegment;
        let u = d.junction.expect("routes share a segment");
        let iu = d.route.index_of(u).expect("junction lies on the route");
        let nodes = d.route.nodes();
        for &v in nodes[..iu].iter().chain(nodes[iu + 1..].iter()) {
            pebbles.place(v, PebbleColor::Blue)?;
        }
        let wu = d.waiter_route.index_of(u).expect("junction lies on both routes");
        let wnodes = d.waiter_route.nodes();
        for &v in &wnodes[wu..wnodes.len() - 1] {
            pebbles.place(v, PebbleColor::Red)?;
        }
    }
    let green_on_waiter = d.alt_target == x;
    pebbles.place(d.alt_target, PebbleColor::Green)?;
    Ok(GeneralPlacement { pebbles, roles, case, decomp: Some(d), green_on_waiter })
}

/// Overlay for a hub node `h` that sees every other node, with the peer at
/// `peer`.  The hub's agent scans its neighbors, skipping the port toward
/// `peer`; red at the hub switches the scan to skip port 0 during the
/// probe sequence, and the greens stop it.
fn hub_overlay(
    g: &Graph,
    pebbles: &mut PebbleMap,
    h: Node,
    peer: Node,
) -> Result<(), PlacementError> {
    let p = g.port_towards(h, peer).expect("a hub is adjacent to every node");
    let last = g.deg(h) - 1;
    let via = |port: Port| g.neighbor(h, port).expect("port < degree").0;
    if p == 0 {
        pebbles.place(h, PebbleColor::Red)?;
        pebbles.place(via(last), PebbleColor::Green)?;
    } else if p == last {
        pebbles.place(via(last - 1), PebbleColor::Green)?;
    } else {
        pebbles.place(via(p - 1), PebbleColor::Red)?;
        pebbles.place(via(last), PebbleColor::Green)?;
    }
    Ok(())
}

/// Complete bipartite-mode placement.
#[derive(Debug, Clone)]
pub struct BipartitePlacement {
    pub pebbles: PebbleMap,
    /// The pebbled designated node (x); its agent crawls to the far end of
    /// the marked route and anchors the meeting.
    pub marked: Node,
    /// The unpebbled designated node (y); its agent locates the anchor by
    /// scanning its own neighborhood.
    pub unmarked: Node,
    /// Two-coloring of the graph, used by the verification layer.
    pub classes: Vec<u8>,
}

/// Places pebbles for the bipartite synchronized-walk protocol.
///
/// The higher-degree designated node is marked (first argument on ties).
/// Adjacent designated nodes get a single pebble at the marked node whose
/// color encodes whether port 0 leads to the other node; distant ones get
/// a black trail along the least shortest path, stopping one hop short.
pub fn place_bipartite(g: &Graph, a: Node, b: Node) -> Result<BipartitePlacement, PlacementError> {
    if a == b {
        return Err(DecomposeError::SameNode { node: a }.into());
    }
    let classes = g.bipartition().ok_or(PlacementError::NotBipartite)?;
    let (x, y) = if g.deg(a) >= g.deg(b) { (a, b) } else { (b, a) };
    let mut pebbles = PebbleMap::new();
    if g.adjacent(x, y) {
        let (first, _) = g.neighbor(x, 0).expect("positive degree");
        let color = if first == y { PebbleColor::Red } else { PebbleColor::Black };
        pebbles.place(x, color)?;
    } else {
        let path = g
            .min_lex_shortest_path(x, y, &Default::default())
            .expect("connected graphs always have some shortest path");
        let nodes = path.nodes();
        for &v in &nodes[..nodes.len() - 1] {
            pebbles.place(v, PebbleColor::Black)?;
        }
    }
    debug_assert!(pebbles.at(y).is_none(), "the unmarked node stays unmarked");
    Ok(BipartitePlacement { pebbles, marked: x, unmarked: y, classes })
}

/// Palette and cardinality audit for a finished placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementAudit {
    pub colors_used: usize,
    pub violations: Vec<String>,
}

impl PlacementAudit {
    #[must_use]
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a pebble map against the palette its mode is allowed to use.
#[must_use]
pub fn validate_placement(pebbles: &PebbleMap, bipartite: bool) -> PlacementAudit {
    let allowed: &[PebbleColor] = if bipartite {
        &[PebbleColor::Red, PebbleColor::Black]
    } else {
        &[PebbleColor::Red, PebbleColor::Blue, PebbleColor::Green]
    };
    let mut violations = Vec::new();
    for (node, color) in pebbles.iter() {
        if !allowed.contains(&color) {
            violations.push(format!("color {color:?} at node {node} outside the palette"));
        }
    }
    let cap = allowed.len();
    let used = pebbles.palette_size();
    if used > cap {
        violations.push(format!("{used} colors used, at most {cap} allowed"));
    }
    PlacementAudit { colors_used: used, violations }
}

/// What a replayed neighbor scan treats as a hit.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ScanTarget {
    RedOnly,
    BlueOnly,
    RedOrBlue,
}

/// Structural audit of a general placement: replays the neighbor scans the
/// agents will run and confirms each one lands on the intended next hop.
///
/// Red at a node means its scan descends, blue means it ascends, the port
/// toward the previous hop is skipped, and the waiter's node must never be
/// probed before the scan resolves.
#[must_use]
pub fn audit_general(g: &Graph, placement: &GeneralPlacement) -> Vec<String> {
    let mut bad = Vec::new();
    let Some(d) = &placement.decomp else {
        return bad;
    };
    let x = placement.roles.waiter;
    let peb = &placement.pebbles;

    let scan = |v: Node, descending: bool, skip: Option<Port>, want: ScanTarget| -> Option<Node> {
        let ports: Vec<Port> =
            if descending { (0..g.deg(v)).rev().collect() } else { (0..g.deg(v)).collect() };
        for p in ports {
            if Some(p) == skip {
                continue;
            }
            let (w, _) = g.neighbor(v, p).expect("port < degree");
            let hit = match peb.at(w) {
                Some(PebbleColor::Red) => want != ScanTarget::BlueOnly,
                Some(PebbleColor::Blue) => want != ScanTarget::RedOnly,
                _ => false,
            };
            if hit {
                return Some(w);
            }
            if w == x {
                // The probe would step onto the waiter before resolving.
                return Some(x);
            }
        }
        None
    };

    // Replays scans from nodes[from..to], each expecting the next entry;
    // the port toward the previous entry is skipped when one exists.
    let mut check_chain = |nodes: &[Node],
                           from: usize,
                           to: usize,
                           descending: &dyn Fn(Node) -> bool,
                           want: ScanTarget| {
        for i in from..to {
            let v = nodes[i];
            let skip = if i == 0 { None } else { g.port_towards(v, nodes[i - 1]) };
            match scan(v, descending(v), skip, want) {
                Some(w) if w == nodes[i + 1] => {}
                got => bad
                    .push(format!("scan from {v} resolves to {got:?}, expected {}", nodes[i + 1])),
            }
        }
    };

    match placement.case {
        PlacementCase::WaiterTouchesRoute => {
            // Mixed colors: each route node scans in the direction its own
            // color dictates and must reach the next hop before the waiter.
            let nodes = d.route.nodes();
            let by_color = |v: Node| peb.at(v) == Some(PebbleColor::Red);
            check_chain(nodes, 0, nodes.len() - 1, &by_color, ScanTarget::RedOrBlue);
        }
        PlacementCase::InitiatorAtTarget | PlacementCase::RoutesMeetOnlyAtStart => {
            // The red trail toward the waiter, stopping one hop short.
            let wnodes = d.waiter_route.nodes();
            check_chain(wnodes, 0, wnodes.len().saturating_sub(2), &|_| true, ScanTarget::RedOnly);
            if placement.case == PlacementCase::RoutesMeetOnlyAtStart {
                // The ascending walk back out along the blue route ignores
                // the red trail entirely.
                let nodes = d.route.nodes();
                check_chain(nodes, 0, nodes.len() - 1, &|_| false, ScanTarget::BlueOnly);
            }
        }
        PlacementCase::RoutesShareSegment => {
            let u = d.junction.expect("routes share a segment");
            let iu = d.route.index_of(u).expect("junction lies on the route");
            let nodes = d.route.nodes();
            // Ascending hops up to the junction may land on the junction's
            // red; past it only blue counts, and the junction's own scan
            // must skip the port it was entered through.
            check_chain(nodes, 0, iu, &|_| false, ScanTarget::RedOrBlue);
            check_chain(nodes, iu, nodes.len() - 1, &|_| false, ScanTarget::BlueOnly);
            // Descending red hops from the junction toward the waiter,
            // stopping one short; the junction's entry there is its route
            // predecessor, handled by slicing one node earlier.
            let wu = d.waiter_route.index_of(u).expect("junction lies on both routes");
            let mut trail: Vec<Node> = Vec::new();
            if iu > 0 {
                trail.push(nodes[iu - 1]);
            }
            trail.extend_from_slice(&d.waiter_route.nodes()[wu..]);
            let start = usize::from(iu > 0);
            check_chain(
                &trail,
                start,
                trail.len().saturating_sub(2),
                &|_| true,
                ScanTarget::RedOnly,
            );
        }
        _ => {}
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::edges;

    #[test]
    fn two_node_placement_is_empty() {
        let g = Graph::from_edges(2, &edges(&[(0, 1, 0, 0)])).expect("valid");
        let p = place_general(&g, 0, 1).expect("places");
        assert!(p.pebbles.is_empty());
        assert_eq!(p.case, PlacementCase::TwoNodes);
    }

    #[test]
    fn roles_flip_when_the_first_node_blocks_the_route() {
        // Star with hub 0: from a leaf, the exploration ends at another
        // leaf and every route there crosses the hub.
        let g = Graph::from_edges(4, &edges(&[(0, 1, 0, 0), (0, 2, 1, 0), (0, 3, 2, 0)]))
            .expect("valid");
        let r = assign_roles(&g, 0, 1).expect("distinct");
        assert!(r.swapped);
        assert_eq!(r.waiter, 1);
        assert_eq!(r.initiator, 0);
        // The reversed pair lands on the same configuration.
        let r2 = assign_roles(&g, 1, 0).expect("distinct");
        assert!(!r2.swapped);
        assert_eq!((r2.waiter, r2.initiator), (r.waiter, r.initiator));
    }

    #[test]
    fn hub_initiator_overlay_on_the_star() {
        let g = Graph::from_edges(4, &edges(&[(0, 1, 0, 0), (0, 2, 1, 0), (0, 3, 2, 0)]))
            .expect("valid");
        let p = place_general(&g, 1, 0).expect("places");
        assert_eq!(p.case, PlacementCase::HubInitiator);
        // The hub reaches the waiter through port 0, so the hub itself is
        // red and the last-port neighbor joins the waiter as green.
        assert_eq!(p.pebbles.at(0), Some(PebbleColor::Red));
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Green));
        assert_eq!(p.pebbles.at(3), Some(PebbleColor::Green));
        assert_eq!(p.pebbles.at(2), None);
    }

    #[test]
    fn triangle_places_hub_overlay() {
        let g = Graph::from_edges(3, &edges(&[(0, 1, 0, 0), (1, 2, 1, 0), (2, 0, 1, 1)]))
            .expect("valid");
        let p = place_general(&g, 0, 1).expect("places");
        assert_eq!(p.case, PlacementCase::HubInitiator);
        assert_eq!(p.roles.waiter, 0);
        assert_eq!(p.pebbles.at(0), Some(PebbleColor::Green));
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Red));
        assert_eq!(p.pebbles.at(2), Some(PebbleColor::Green));
    }

    #[test]
    fn end_to_end_path_flags_green_on_waiter() {
        // Path 0-1-2 with the pair at its ends: the exploration from 0
        // ends at 2, the return route swallows node 1, and the only spare
        // node is the waiter itself.
        let g = gen::three_path();
        let p = place_general(&g, 0, 2).expect("places");
        assert_eq!(p.case, PlacementCase::InitiatorAtTarget);
        assert!(p.green_on_waiter);
        assert_eq!(p.pebbles.at(2), Some(PebbleColor::Red));
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Red));
        assert_eq!(p.pebbles.at(0), Some(PebbleColor::Green));
    }

    #[test]
    fn longer_path_keeps_the_waiter_clean() {
        // Path 0-1-2-3-4, pair (1, 3).  Roles keep x=1: the exploration
        // from 1 ends at 4 and node 3 reaches it without crossing 1.
        let g =
            Graph::from_edges(5, &edges(&[(0, 1, 0, 0), (1, 2, 1, 0), (2, 3, 1, 0), (3, 4, 1, 0)]))
                .expect("valid");
        let p = place_general(&g, 1, 3).expect("places");
        assert_eq!(p.roles.waiter, 1);
        assert!(!p.green_on_waiter);
        assert_eq!(p.pebbles.at(1), None, "waiter stays unpebbled");
        let audit = validate_placement(&p.pebbles, false);
        assert!(audit.ok(), "{:?}", audit.violations);
        assert!(audit_general(&g, &p).is_empty());
    }

    #[test]
    fn bipartite_adjacent_pair_reads_port_zero() {
        let g = gen::three_path();
        // Pair (1, 0): node 1 has the higher degree, port 0 leads to 0.
        let p = place_bipartite(&g, 1, 0).expect("places");
        assert_eq!(p.marked, 1);
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Red));
        assert_eq!(p.pebbles.len(), 1);
        // Pair (1, 2): port 0 leads elsewhere.
        let p = place_bipartite(&g, 1, 2).expect("places");
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Black));
    }

    #[test]
    fn bipartite_distant_pair_gets_a_black_trail() {
        let g = gen::three_path();
        let p = place_bipartite(&g, 0, 2).expect("places");
        // Equal degrees: the first argument is marked.
        assert_eq!(p.marked, 0);
        assert_eq!(p.pebbles.at(0), Some(PebbleColor::Black));
        assert_eq!(p.pebbles.at(1), Some(PebbleColor::Black));
        assert_eq!(p.pebbles.at(2), None);
    }

    #[test]
    fn bipartite_rejects_odd_cycles() {
        let g = Graph::from_edges(3, &edges(&[(0, 1, 0, 0), (1, 2, 1, 0), (2, 0, 1, 1)]))
            .expect("valid");
        assert_eq!(place_bipartite(&g, 0, 1).unwrap_err(), PlacementError::NotBipartite);
    }

    #[test]
    fn palette_check_flags_foreign_colors() {
        let mut peb = PebbleMap::new();
        peb.place(0, PebbleColor::Green).unwrap();
        let audit = validate_placement(&peb, true);
        assert!(!audit.ok());
    }

    #[test]
    fn overlap_is_rejected() {
        let mut peb = PebbleMap::new();
        peb.place(0, PebbleColor::Red).unwrap();
        assert_eq!(
            peb.place(0, PebbleColor::Blue).unwrap_err(),
            PlacementError::Overlap { node: 0 }
        );
    }

    /// Every case-3 placement over a batch of random graphs passes the
    /// scan audit and keeps the waiter unpebbled.
    #[test]
    fn random_placements_pass_the_scan_audit() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240817);
        let mut route_cases = 0;
        for _ in 0..300 {
            let n = rng.gen_range(4..=9);
            let extra = rng.gen_range(0..=n);
            let g = gen::random_graph(n, extra, &mut rng);
            let (a, b) = gen::random_pair(n, &mut rng);
            let p = place_general(&g, a, b).expect("roles remove the blocked direction");
            let audit = validate_placement(&p.pebbles, false);
            assert!(audit.ok(), "{:?}", audit.violations);
            let scan_audit = audit_general(&g, &p);
            assert!(scan_audit.is_empty(), "{scan_audit:?}");
            if p.decomp.is_some() {
                route_cases += 1;
                if !p.green_on_waiter {
                    assert_eq!(p.pebbles.at(p.roles.waiter), None);
                }
            }
        }
        assert!(route_cases > 50, "sweep barely exercised the route cases");
    }
}
