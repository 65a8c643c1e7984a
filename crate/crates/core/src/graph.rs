//! Anonymous port-labeled graphs.
//!
//! A graph on `n` nodes is simple, connected and undirected.  A node of
//! degree `d` numbers its incident edges with ports `0..d-1`; the two
//! endpoints of an edge label it independently.  Nodes carry no identifiers
//! an agent could read: node indices exist only for the simulator and the
//! verification layers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node, meaningful only outside the agents' perception.
pub type Node = usize;
/// Port number local to one endpoint of one edge.
pub type Port = usize;

/// One undirected edge with its two independent endpoint labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: Node,
    pub v: Node,
    /// Port of the edge at `u`.
    pub pu: Port,
    /// Port of the edge at `v`.
    pub pv: Port,
}

/// Serialized form of a graph: node count plus explicit edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<EdgeSpec>,
}

/// Rejections raised while building or addressing a graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: Node, n: usize },
    #[error("self loop at node {node}")]
    SelfLoop { node: Node },
    #[error("duplicate edge between {u} and {v}")]
    DuplicateEdge { u: Node, v: Node },
    #[error("port {port} used twice at node {node}")]
    PortClash { node: Node, port: Port },
    #[error("ports at node {node} are not contiguous: degree {deg} but port {port} present")]
    PortGap { node: Node, deg: usize, port: Port },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no nodes")]
    Empty,
    #[error("bad port {port} at node {node} of degree {deg}")]
    BadPort { node: Node, port: Port, deg: usize },
}

/// Rejections raised by shortest-path selection.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no path from {from} to {to}")]
    Unreachable { from: Node, to: Node },
    #[error("every shortest path from {from} to {to} crosses a forbidden node")]
    NoAvoidingPath { from: Node, to: Node },
}

/// A walk along consecutive ports, stored with the nodes it traverses.
///
/// `nodes` always has one more entry than `ports`; `nodes[0]` is the start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortPath {
    nodes: Vec<Node>,
    ports: Vec<Port>,
}

impl PortPath {
    /// Path consisting of a single node and no moves.
    pub fn trivial(at: Node) -> Self {
        PortPath { nodes: vec![at], ports: Vec::new() }
    }

    /// Number of edges traversed.
    #[must_use]
    pub fn len(&self) -> usize {
        self.ports.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    #[must_use]
    pub fn start(&self) -> Node {
        self.nodes[0]
    }

    #[must_use]
    pub fn end(&self) -> Node {
        *self.nodes.last().expect("path has at least one node")
    }

    #[must_use]
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[must_use]
    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    #[must_use]
    pub fn contains(&self, v: Node) -> bool {
        self.nodes.contains(&v)
    }

    /// Position of `v` along the path, if it lies on it.
    #[must_use]
    pub fn index_of(&self, v: Node) -> Option<usize> {
        self.nodes.iter().position(|&w| w == v)
    }

    /// Sub-path from position `from` to position `to` (inclusive endpoints).
    pub fn slice(&self, from: usize, to: usize) -> PortPath {
        assert!(from <= to && to < self.nodes.len(), "slice out of bounds");
        PortPath { nodes: self.nodes[from..=to].to_vec(), ports: self.ports[from..to].to_vec() }
    }
}

/// Validated anonymous port-labeled graph.
///
/// `adj[v][p]` holds `(w, q)`: port `p` at `v` leads to `w`, entering
/// through port `q` at `w`.  Construction guarantees the graph is simple,
/// connected, and that every node's ports are exactly `0..deg`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<(Node, Port)>>,
}

impl Graph {
    /// Builds and validates a graph from an explicit edge list.
    pub fn from_edges(n: usize, edges: &[EdgeSpec]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut ports: Vec<BTreeMap<Port, (Node, Port)>> = vec![BTreeMap::new(); n];
        let mut seen: BTreeSet<(Node, Node)> = BTreeSet::new();
        for e in edges {
            for node in [e.u, e.v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop { node: e.u });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge { u: key.0, v: key.1 });
            }
            for (node, port, other, rev) in [(e.u, e.pu, e.v, e.pv), (e.v, e.pv, e.u, e.pu)] {
                if ports[node].insert(port, (other, rev)).is_some() {
                    return Err(GraphError::PortClash { node, port });
                }
            }
        }
        let mut adj = Vec::with_capacity(n);
        for (node, m) in ports.into_iter().enumerate() {
            let deg = m.len();
            let mut row = Vec::with_capacity(deg);
            for (port, dest) in m {
                if port != row.len() {
                    return Err(GraphError::PortGap { node, deg, port });
                }
                row.push(dest);
            }
            adj.push(row);
        }
        let g = Graph { adj };
        if n > 1 {
            let dist = g.bfs_raw(0);
            if dist.iter().any(|d| d.is_none()) {
                return Err(GraphError::Disconnected);
            }
        }
        Ok(g)
    }

    pub fn from_file(f: &GraphFile) -> Result<Self, GraphError> {
        Self::from_edges(f.n, &f.edges)
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let f: GraphFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::from_file(&f).map_err(|e| e.to_string())
    }

    /// Canonical edge list (each edge once, `u < v`).
    #[must_use]
    pub fn to_file(&self) -> GraphFile {
        let mut edges = Vec::new();
        for u in 0..self.n() {
            for (pu, &(v, pv)) in self.adj[u].iter().enumerate() {
                if u < v {
                    edges.push(EdgeSpec { u, v, pu, pv });
                }
            }
        }
        GraphFile { n: self.n(), edges }
    }

    #[must_use]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serializes")
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[must_use]
    pub fn deg(&self, v: Node) -> usize {
        self.adj[v].len()
    }

    /// Maximum degree over all nodes.
    #[must_use]
    pub fn max_deg(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Destination of port `p` at `v`, with the entry port at the far end.
    pub fn neighbor(&self, v: Node, p: Port) -> Result<(Node, Port), GraphError> {
        self.adj[v].get(p).copied().ok_or(GraphError::BadPort {
            node: v,
            port: p,
            deg: self.deg(v),
        })
    }

    /// Iterates `(port, neighbor)` pairs at `v` in port order.
    pub fn neighbors(&self, v: Node) -> impl Iterator<Item = (Port, Node)> + '_ {
        self.adj[v].iter().enumerate().map(|(p, &(w, _))| (p, w))
    }

    #[must_use]
    pub fn adjacent(&self, a: Node, b: Node) -> bool {
        self.adj[a].iter().any(|&(w, _)| w == b)
    }

    /// Port at `a` whose edge leads to `b`, if the two are adjacent.
    #[must_use]
    pub fn port_towards(&self, a: Node, b: Node) -> Option<Port> {
        self.adj[a].iter().position(|&(w, _)| w == b)
    }

    fn bfs_raw(&self, root: Node) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued nodes have distances");
            for &(w, _) in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// BFS distances from `root`.  Construction guarantees reachability.
    #[must_use]
    pub fn distances(&self, root: Node) -> Vec<usize> {
        self.bfs_raw(root)
            .into_iter()
            .map(|d| d.expect("constructed graphs are connected"))
            .collect()
    }

    #[must_use]
    pub fn distance(&self, a: Node, b: Node) -> usize {
        self.distances(a)[b]
    }

    /// Eccentricity of `root`: the largest BFS distance from it.
    #[must_use]
    pub fn eccentricity(&self, root: Node) -> usize {
        self.distances(root).into_iter().max().unwrap_or(0)
    }

    /// Diameter (largest eccentricity over all nodes).
    #[must_use]
    pub fn diameter(&self) -> usize {
        (0..self.n()).map(|v| self.eccentricity(v)).max().unwrap_or(0)
    }

    /// The shortest path from `a` to `b` whose port sequence is
    /// lexicographically least among shortest paths that avoid `forbidden`.
    ///
    /// Feasibility is decided on the shortest-path DAG first, so the greedy
    /// smallest-port choice below never walks into a dead end.
    pub fn min_lex_shortest_path(
        &self,
        a: Node,
        b: Node,
        forbidden: &BTreeSet<Node>,
    ) -> Result<PortPath, PathError> {
        if a == b {
            if forbidden.contains(&a) {
                return Err(PathError::NoAvoidingPath { from: a, to: b });
            }
            return Ok(PortPath::trivial(a));
        }
        let da = self.distances(a);
        let db = self.distances(b);
        let total = da[b];
        // A node is usable when it sits on some shortest a-b path and is
        // not forbidden; `can[v]` additionally requires a usable suffix
        // from v all the way to b.
        let usable: Vec<bool> =
            (0..self.n()).map(|v| da[v] + db[v] == total && !forbidden.contains(&v)).collect();
        let mut order: Vec<Node> = (0..self.n()).filter(|&v| usable[v]).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(da[v]));
        let mut can = vec![false; self.n()];
        if usable[b] {
            can[b] = true;
        }
        for &v in &order {
            if v == b {
                continue;
            }
            can[v] = self.adj[v]
                .iter()
                .any(|&(w, _)| da[w] == da[v] + 1 && db[w] + 1 == db[v] && can[w]);
        }
        if !can[a] {
            return Err(PathError::NoAvoidingPath { from: a, to: b });
        }
        let mut nodes = vec![a];
        let mut ports = Vec::with_capacity(total);
        let mut cur = a;
        while cur != b {
            let (p, w) = self.adj[cur]
                .iter()
                .enumerate()
                .find(|&(_, &(w, _))| da[w] == da[cur] + 1 && db[w] + 1 == db[cur] && can[w])
                .map(|(p, &(w, _))| (p, w))
                .expect("can-complete nodes have a usable successor");
            ports.push(p);
            nodes.push(w);
            cur = w;
        }
        Ok(PortPath { nodes, ports })
    }

    /// Every shortest path from `a` to `b`, as port paths.
    ///
    /// Exponential in the worst case; meant as an independent reference for
    /// the greedy selection above and for small-instance audits.
    #[must_use]
    pub fn all_shortest_paths(&self, a: Node, b: Node) -> Vec<PortPath> {
        if a == b {
            return vec![PortPath::trivial(a)];
        }
        let da = self.distances(a);
        let db = self.distances(b);
        let mut out = Vec::new();
        let mut nodes = vec![a];
        let mut ports = Vec::new();
        self.collect_paths(b, &da, &db, &mut nodes, &mut ports, &mut out);
        out
    }

    fn collect_paths(
        &self,
        b: Node,
        da: &[usize],
        db: &[usize],
        nodes: &mut Vec<Node>,
        ports: &mut Vec<Port>,
        out: &mut Vec<PortPath>,
    ) {
        let total = da[b];
        let cur = *nodes.last().expect("non-empty path stack");
        if cur == b {
            out.push(PortPath { nodes: nodes.clone(), ports: ports.clone() });
            return;
        }
        for (p, &(w, _)) in self.adj[cur].iter().enumerate() {
            if da[w] == da[cur] + 1 && db[w] + 1 == db[cur] && da[w] + db[w] == total {
                nodes.push(w);
                ports.push(p);
                self.collect_paths(b, da, db, nodes, ports, out);
                nodes.pop();
                ports.pop();
            }
        }
    }

    /// Does `w` lie on every shortest path from `a` to `b`?
    #[must_use]
    pub fn on_every_shortest_path(&self, a: Node, b: Node, w: Node) -> bool {
        if w == a || w == b {
            return true;
        }
        let da = self.distances(a);
        let db = self.distances(b);
        if da[w] + db[w] != da[b] {
            return false;
        }
        let mut forbidden = BTreeSet::new();
        forbidden.insert(w);
        self.min_lex_shortest_path(a, b, &forbidden).is_err()
    }

    /// Two-coloring of the nodes, or `None` when an odd cycle exists.
    #[must_use]
    pub fn bipartition(&self) -> Option<Vec<u8>> {
        let mut side = vec![None; self.n()];
        side[0] = Some(0u8);
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            let s = side[v].expect("queued nodes are colored");
            for &(w, _) in &self.adj[v] {
                match side[w] {
                    None => {
                        side[w] = Some(1 - s);
                        queue.push_back(w);
                    }
                    Some(t) if t == s => return None,
                    Some(_) => {}
                }
            }
        }
        Some(side.into_iter().map(|s| s.expect("connected")).collect())
    }

    /// Order-independent fingerprint of the labeled graph.
    #[must_use]
    pub fn stable_hash(&self) -> u64 {
        // FNV-1a over the adjacency rows in index order.  The layout is
        // canonical for a given labeled graph, so equal graphs hash equal.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        eat(self.n() as u64);
        for v in 0..self.n() {
            eat(self.deg(v) as u64);
            for &(w, q) in &self.adj[v] {
                eat(w as u64);
                eat(q as u64);
            }
        }
        h
    }

    /// Graphviz rendering with optional per-node annotations.
    #[must_use]
    pub fn to_dot(&self, marks: &BTreeMap<Node, String>) -> String {
        let mut out = String::from("graph G {\n  node [shape=circle];\n");
        for v in 0..self.n() {
            let mark = marks.get(&v).map(|m| format!("\\n{m}")).unwrap_or_default();
            out.push_str(&format!("  {v} [label=\"{v}{mark}\"];\n"));
        }
        for u in 0..self.n() {
            for (pu, &(v, pv)) in self.adj[u].iter().enumerate() {
                if u < v {
                    out.push_str(&format!(
                        "  {u} -- {v} [taillabel=\"{pu}\", headlabel=\"{pv}\", fontsize=9];\n"
                    ));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Shorthand used throughout the tests: edge list as `(u, v, pu, pv)`.
pub fn edges(list: &[(Node, Node, Port, Port)]) -> Vec<EdgeSpec> {
    list.iter().map(|&(u, v, pu, pv)| EdgeSpec { u, v, pu, pv }).collect()
}
