//! Instance generators: exhaustive small graphs, seeded random graphs, and
//! the fixed four-node family used by the impossibility argument.
//!
//! All randomness flows through a caller-supplied ChaCha stream so every
//! generated instance can be replayed from its seed.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{edges, EdgeSpec, Graph, Node, Port};

/// All permutations of `0..k`, in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..k).collect();
    loop {
        out.push(items.clone());
        // Next lexicographic permutation, or stop after the last one.
        let Some(i) = (0..k - 1).rev().find(|&i| items[i] < items[i + 1]) else {
            break;
        };
        let j = (i + 1..k).rev().find(|&j| items[j] > items[i]).expect("successor exists");
        items.swap(i, j);
        items[i + 1..].reverse();
    }
    out
}

fn connected(n: usize, pairs: &[(Node, Node)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, v: usize) -> usize {
        if parent[v] != v {
            let r = find(parent, parent[v]);
            parent[v] = r;
        }
        parent[v]
    }
    for &(u, v) in pairs {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru] = rv;
    }
    (0..n).all(|v| find(&mut parent, v) == find(&mut parent, 0))
}

/// Every connected simple graph on `{0..n-1}` under every port labeling.
///
/// Grows explosively; intended for `n <= 5`.  Each underlying edge set is
/// expanded into the full product of per-node incident-edge permutations,
/// so two results never describe the same labeled graph.
#[must_use]
pub fn all_connected_graphs(n: usize) -> Vec<Graph> {
    assert!((1..=5).contains(&n), "exhaustive enumeration is for tiny graphs");
    if n == 1 {
        return vec![Graph::from_edges(1, &[]).expect("single node")];
    }
    let all_pairs: Vec<(Node, Node)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let m = all_pairs.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        if (mask.count_ones() as usize) < n - 1 {
            continue;
        }
        let chosen: Vec<(Node, Node)> =
            (0..m).filter(|&i| mask & (1 << i) != 0).map(|i| all_pairs[i]).collect();
        if !connected(n, &chosen) {
            continue;
        }
        // Incident edge indices per node, in a fixed reference order.
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, &(u, v)) in chosen.iter().enumerate() {
            incident[u].push(e);
            incident[v].push(e);
        }
        let perms_per_node: Vec<Vec<Vec<usize>>> =
            incident.iter().map(|inc| permutations(inc.len())).collect();
        // Odometer over the per-node permutation choices.
        let mut pick = vec![0usize; n];
        loop {
            let mut port_of: Vec<std::collections::BTreeMap<usize, Port>> =
                vec![std::collections::BTreeMap::new(); n];
            for v in 0..n {
                let perm = &perms_per_node[v][pick[v]];
                for (port, &slot) in perm.iter().enumerate() {
                    port_of[v].insert(incident[v][slot], port);
                }
            }
            let specs: Vec<EdgeSpec> = chosen
                .iter()
                .enumerate()
                .map(|(e, &(u, v))| EdgeSpec { u, v, pu: port_of[u][&e], pv: port_of[v][&e] })
                .collect();
            out.push(Graph::from_edges(n, &specs).expect("enumerated graphs are valid"));
            // Advance the odometer.
            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                pick[i] += 1;
                if pick[i] < perms_per_node[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    out
}

fn prufer_tree(n: usize, rng: &mut impl Rng) -> Vec<(Node, Node)> {
    assert!(n >= 2);
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    let mut out = Vec::with_capacity(n - 1);
    for &s in &seq {
        let leaf = *leaves.iter().next().expect("tree always has a leaf");
        leaves.remove(&leaf);
        out.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    out.push((rest[0], rest[1]));
    out
}

fn label_ports(n: usize, pairs: &[(Node, Node)], rng: &mut impl Rng) -> Graph {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v)) in pairs.iter().enumerate() {
        incident[u].push(e);
        incident[v].push(e);
    }
    let mut port_of: Vec<std::collections::BTreeMap<usize, Port>> =
        vec![std::collections::BTreeMap::new(); n];
    for v in 0..n {
        let mut order = incident[v].clone();
        order.shuffle(rng);
        for (port, &e) in order.iter().enumerate() {
            port_of[v].insert(e, port);
        }
    }
    let specs: Vec<EdgeSpec> = pairs
        .iter()
        .enumerate()
        .map(|(e, &(u, v))| EdgeSpec { u, v, pu: port_of[u][&e], pv: port_of[v][&e] })
        .collect();
    Graph::from_edges(n, &specs).expect("tree plus extra edges stays valid")
}

/// Seeded random connected graph: a uniform spanning tree plus up to
/// `extra` additional edges, under uniformly random port labelings.
pub fn random_graph(n: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut pairs = prufer_tree(n, rng);
    let mut candidates: Vec<(Node, Node)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !pairs.contains(&(u, v)) && !pairs.contains(&(v, u)))
        .collect();
    candidates.shuffle(rng);
    pairs.extend(candidates.into_iter().take(extra));
    label_ports(n, &pairs, rng)
}

/// Seeded random connected bipartite graph: a random tree plus extra edges
/// drawn only between the two sides of the tree's bipartition.
pub fn random_bipartite(n: usize, extra: usize, rng: &mut impl Rng) -> Graph {
    let mut pairs = prufer_tree(n, rng);
    // Two-color the tree to know which extra edges keep it bipartite.
    let mut side = vec![u8::MAX; n];
    side[0] = 0;
    let mut changed = true;
    while changed {
        changed = false;
        for &(u, v) in &pairs {
            if side[u] != u8::MAX && side[v] == u8::MAX {
                side[v] = 1 - side[u];
                changed = true;
            } else if side[v] != u8::MAX && side[u] == u8::MAX {
                side[u] = 1 - side[v];
                changed = true;
            }
        }
    }
    let mut candidates: Vec<(Node, Node)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| side[u] != side[v])
        .filter(|&(u, v)| !pairs.contains(&(u, v)) && !pairs.contains(&(v, u)))
        .collect();
    candidates.shuffle(rng);
    pairs.extend(candidates.into_iter().take(extra));
    label_ports(n, &pairs, rng)
}

/// Two distinct nodes, uniformly at random.
pub fn random_pair(n: usize, rng: &mut impl Rng) -> (Node, Node) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// The three four-node graphs behind the two-round lower bound, each with
/// the designated start nodes `(0, 2)`.
///
/// All three share a four-cycle `0-1-2-3` and a chord `0-2`; variant `i`
/// relabels ports at nodes 0 and 2 so the chord sits on port `i` at both
/// of its endpoints.  Degree-3 nodes are exactly 0 and 2, so an agent at
/// either endpoint cannot tell the variants apart before moving.
#[must_use]
pub fn lower_bound_family() -> [(Graph, Node, Node); 3] {
    let base =
        [(0usize, 1usize, 0usize, 0usize), (1, 2, 1, 0), (2, 3, 1, 0), (3, 0, 1, 1), (0, 2, 2, 2)];
    let build = |variant: Port| {
        let relabel = |node: Node, port: Port| -> Port {
            if node != 0 && node != 2 {
                return port;
            }
            if port == 2 {
                variant
            } else if port == variant {
                2
            } else {
                port
            }
        };
        let specs: Vec<EdgeSpec> = base
            .iter()
            .map(|&(u, v, pu, pv)| EdgeSpec { u, v, pu: relabel(u, pu), pv: relabel(v, pv) })
            .collect();
        Graph::from_edges(4, &specs).expect("family member is valid")
    };
    [(build(0), 0, 2), (build(1), 0, 2), (build(2), 0, 2)]
}

/// Fixed three-node path used in examples and smoke tests.
#[must_use]
pub fn three_path() -> Graph {
    Graph::from_edges(3, &edges(&[(0, 1, 0, 0), (1, 2, 1, 0)])).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn tiny_enumerations_have_the_expected_sizes() {
        // n=2: the single edge, one labeling.  n=3: the path under its
        // 3 * 2 labelings plus the triangle under 2^3 labelings.
        assert_eq!(all_connected_graphs(2).len(), 1);
        assert_eq!(all_connected_graphs(3).len(), 6 + 8);
    }

    #[test]
    fn enumerated_labelings_are_pairwise_distinct() {
        let all = all_connected_graphs(4);
        let keys: BTreeSet<String> =
            all.iter().map(|g| serde_json::to_string(&g.to_file()).unwrap()).collect();
        assert_eq!(keys.len(), all.len());
    }

    #[test]
    fn random_graphs_replay_from_their_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a = random_graph(8, 3, &mut r1);
        let b = random_graph(8, 3, &mut r2);
        assert_eq!(a, b);
        assert_eq!(a.n(), 8);
    }

    #[test]
    fn random_bipartite_graphs_two_color() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(3..=8);
            let extra = rng.gen_range(0..=4);
            let g = random_bipartite(n, extra, &mut rng);
            assert!(g.bipartition().is_some(), "generator broke bipartiteness");
        }
    }

    #[test]
    fn family_members_put_the_chord_on_their_own_port() {
        let family = lower_bound_family();
        for (i, (g, x, y)) in family.iter().enumerate() {
            assert_eq!((*x, *y), (0, 2));
            assert_eq!(g.deg(0), 3);
            assert_eq!(g.deg(2), 3);
            assert_eq!(g.deg(1), 2);
            assert_eq!(g.deg(3), 2);
            // The chord joins the two degree-3 nodes through port i on
            // both sides.
            assert_eq!(g.neighbor(0, i).unwrap(), (2, i));
            assert_eq!(g.neighbor(2, i).unwrap(), (0, i));
        }
        // The three labelings are genuinely different graphs.
        let keys: BTreeSet<u64> = family.iter().map(|(g, _, _)| g.stable_hash()).collect();
        assert_eq!(keys.len(), 3);
    }

    #[test]
    fn permutation_helper_counts_factorials() {
        assert_eq!(permutations(0).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
        let p3 = permutations(3);
        assert_eq!(p3[0], vec![0, 1, 2]);
        assert_eq!(p3[5], vec![2, 1, 0]);
    }
}
