//! Universal exploration sequences: offset lists that steer a walk through
//! every node of every small graph, or of one concrete graph, regardless
//! of the start node.
//!
//! A sequence is applied relative to entry ports: a step with offset `o`
//! leaves through port `(entry + o) mod deg`, where `entry` is the port
//! the walk arrived through (0 before the first move).  Shipped sequences
//! were found by seeded random search and are re-certified against the
//! full enumeration by the tests; sequences for larger graphs are searched
//! per instance and certified only for that instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::all_connected_graphs;
use crate::graph::{Graph, GraphFile, Node};

/// How a sequence earned its coverage claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    /// Checked against every connected port-labeled graph up to `n_max`
    /// nodes, from every start node.
    BruteForceCertified { n_max: usize },
    /// Checked from every start node of one concrete graph.
    VerifiedOnInstance { graph_hash: u64 },
    /// No coverage claim.
    Uncertified,
}

/// An offset list with the size class it serves and its certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationSequence {
    n: usize,
    offsets: Vec<usize>,
    certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UxsError {
    #[error("no certified sequence is shipped for n = {n}")]
    NoCertifiedSequence { n: usize },
    #[error("random search exhausted its {attempts} attempts")]
    BudgetExceeded { attempts: u64 },
    #[error("exhaustive certification beyond n = {limit} is not feasible")]
    ExplosionCap { limit: usize },
    #[error("an exploration sequence must contain at least one offset")]
    EmptySequence,
    #[error("malformed sequence file: {reason}")]
    BadFile { reason: String },
}

/// First witness that a sequence fails to cover some graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageGap {
    pub graph: GraphFile,
    pub start: Node,
}

impl ExplorationSequence {
    pub fn new(n: usize, offsets: Vec<usize>, certificate: Certificate) -> Result<Self, UxsError> {
        if offsets.is_empty() {
            return Err(UxsError::EmptySequence);
        }
        Ok(ExplorationSequence { n, offsets, certificate })
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    #[must_use]
    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// Plain-text form: a comment header plus one `offsets` line.
    #[must_use]
    pub fn to_text(&self) -> String {
        let cert = match self.certificate {
            Certificate::BruteForceCertified { n_max } => format!("brute-force {n_max}"),
            Certificate::VerifiedOnInstance { graph_hash } => {
                format!("instance {graph_hash:016x}")
            }
            Certificate::Uncertified => "none".to_string(),
        };
        let offsets: Vec<String> = self.offsets.iter().map(|o| o.to_string()).collect();
        format!(
            "# universal exploration sequence\nn {}\ncertificate {}\noffsets {}\n",
            self.n,
            cert,
            offsets.join(" ")
        )
    }

    pub fn from_text(text: &str) -> Result<Self, UxsError> {
        let mut n = None;
        let mut certificate = Certificate::Uncertified;
        let mut offsets = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(' ').ok_or_else(|| UxsError::BadFile {
                reason: format!("line without a value: {line:?}"),
            })?;
            match key {
                "n" => {
                    n = Some(rest.trim().parse().map_err(|_| UxsError::BadFile {
                        reason: format!("bad node count {rest:?}"),
                    })?);
                }
                "certificate" => {
                    let mut parts = rest.split_whitespace();
                    certificate = match parts.next() {
                        Some("brute-force") => Certificate::BruteForceCertified {
                            n_max: parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
                                UxsError::BadFile {
                                    reason: "brute-force certificate without a bound".into(),
                                }
                            })?,
                        },
                        Some("instance") => Certificate::VerifiedOnInstance {
                            graph_hash: parts
                                .next()
                                .and_then(|s| u64::from_str_radix(s, 16).ok())
                                .ok_or_else(|| UxsError::BadFile {
                                    reason: "instance certificate without a hash".into(),
                                })?,
                        },
                        Some("none") => Certificate::Uncertified,
                        other => {
                            return Err(UxsError::BadFile {
                                reason: format!("unknown certificate {other:?}"),
                            })
                        }
                    };
                }
                "offsets" => {
                    let parsed: Result<Vec<usize>, _> =
                        rest.split_whitespace().map(str::parse).collect();
                    offsets = Some(parsed.map_err(|_| UxsError::BadFile {
                        reason: "offsets must be non-negative integers".into(),
                    })?);
                }
                other => {
                    return Err(UxsError::BadFile { reason: format!("unknown key {other:?}") })
                }
            }
        }
        let n = n.ok_or_else(|| UxsError::BadFile { reason: "missing n".into() })?;
        let offsets =
            offsets.ok_or_else(|| UxsError::BadFile { reason: "missing offsets".into() })?;
        Self::new(n, offsets, certificate)
    }
}

/// Walks `offsets` from `start`, returning every node stood on, start
/// included; the result has `offsets.len() + 1` entries.
#[must_use]
pub fn apply(g: &Graph, start: Node, offsets: &[usize]) -> Vec<Node> {
    let mut trace = Vec::with_capacity(offsets.len() + 1);
    trace.push(start);
    let mut cur = start;
    let mut entry = 0usize;
    for &o in offsets {
        let port = (entry + o) % g.deg(cur);
        let (next, rev) = g.neighbor(cur, port).expect("reduced port is valid");
        trace.push(next);
        cur = next;
        entry = rev;
    }
    trace
}

/// Largest size class the exhaustive certifier will take on.
pub const CERTIFY_LIMIT: usize = 4;

/// Checks `offsets` against every connected port-labeled graph with at
/// most `n_max` nodes, from every start node.
pub fn verify_universal(
    offsets: &[usize],
    n_max: usize,
) -> Result<Result<(), CoverageGap>, UxsError> {
    if n_max > CERTIFY_LIMIT {
        return Err(UxsError::ExplosionCap { limit: CERTIFY_LIMIT });
    }
    for n in 2..=n_max {
        for g in all_connected_graphs(n) {
            for start in 0..n {
                let trace = apply(&g, start, offsets);
                let mut seen = vec![false; n];
                for &v in &trace {
                    seen[v] = true;
                }
                if seen.iter().any(|s| !s) {
                    return Ok(Err(CoverageGap { graph: g.to_file(), start }));
                }
            }
        }
    }
    Ok(Ok(()))
}

/// Shipped offsets, found by seeded random search and frozen; the tests
/// re-certify them against the full enumeration on every run.
const SHIPPED_2: &[usize] = &[0];
const SHIPPED_3: &[usize] = SHIPPED_4;
const SHIPPED_4: &[usize] = &[0, 3, 0, 2, 0, 2, 1, 1, 1, 2, 3, 1];

/// The shipped sequence covering all graphs of at most `n` nodes.
pub fn certified(n: usize) -> Result<ExplorationSequence, UxsError> {
    let offsets: &[usize] = match n {
        2 => SHIPPED_2,
        3 => SHIPPED_3,
        4 => SHIPPED_4,
        _ => return Err(UxsError::NoCertifiedSequence { n }),
    };
    ExplorationSequence::new(n, offsets.to_vec(), Certificate::BruteForceCertified { n_max: n })
}

/// Does `offsets` visit all of `g` from every start node?
#[must_use]
pub fn covers_instance(g: &Graph, offsets: &[usize]) -> bool {
    (0..g.n()).all(|start| {
        let trace = apply(g, start, offsets);
        let mut seen = vec![false; g.n()];
        for &v in &trace {
            seen[v] = true;
        }
        seen.into_iter().all(|s| s)
    })
}

/// Searches random offset lists until one covers `g` from every start.
///
/// The sequence length is fixed at `4 n^3`, comfortably above what the
/// searches need in practice while keeping protocol running time
/// polynomial in `n`.
pub fn for_instance(g: &Graph, seed: u64, attempts: u64) -> Result<ExplorationSequence, UxsError> {
    let n = g.n();
    let len = 4 * n * n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let offsets: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n.max(2))).collect();
        if covers_instance(g, &offsets) {
            return ExplorationSequence::new(
                n,
                offsets,
                Certificate::VerifiedOnInstance { graph_hash: g.stable_hash() },
            );
        }
    }
    Err(UxsError::BudgetExceeded { attempts })
}

/// A sequence fit for an `n`-node instance: the shipped table when it
/// reaches that far, otherwise seeded per-instance search.
pub fn provide(g: &Graph, seed: u64, attempts: u64) -> Result<ExplorationSequence, UxsError> {
    match certified(g.n()) {
        Ok(seq) => Ok(seq),
        Err(UxsError::NoCertifiedSequence { .. }) => for_instance(g, seed, attempts),
        Err(e) => Err(e),
    }
}

/// Seeded random search for a sequence covering every graph up to `n_max`
/// nodes; used once to produce the shipped constants.
pub fn search_universal(
    n_max: usize,
    len: usize,
    seed: u64,
    attempts: u64,
) -> Result<Vec<usize>, UxsError> {
    let graphs: Vec<Graph> = (2..=n_max).flat_map(all_connected_graphs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let offsets: Vec<usize> = (0..len).map(|_| rng.gen_range(0..4)).collect();
        if graphs.iter().all(|g| covers_instance(g, &offsets)) {
            return Ok(offsets);
        }
    }
    Err(UxsError::BudgetExceeded { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn apply_reports_the_full_walk() {
        let g = gen::three_path();
        // From node 0: entry 0, offset 0 -> port 0 -> node 1 (entry 0);
        // offset 1 -> port (0+1)%2=1 -> node 2.
        let trace = apply(&g, 0, &[0, 1]);
        assert_eq!(trace, vec![0, 1, 2]);
    }

    #[test]
    fn text_round_trip() {
        let seq = ExplorationSequence::new(
            4,
            vec![0, 1, 2, 0],
            Certificate::BruteForceCertified { n_max: 4 },
        )
        .expect("nonempty");
        let text = seq.to_text();
        let back = ExplorationSequence::from_text(&text).expect("parses");
        assert_eq!(seq, back);
        let inst = ExplorationSequence::new(
            6,
            vec![3, 0],
            Certificate::VerifiedOnInstance { graph_hash: 0xabcdef },
        )
        .expect("nonempty");
        assert_eq!(ExplorationSequence::from_text(&inst.to_text()).expect("parses"), inst);
    }

    #[test]
    fn empty_sequences_are_rejected() {
        assert_eq!(
            ExplorationSequence::new(3, vec![], Certificate::Uncertified).unwrap_err(),
            UxsError::EmptySequence
        );
    }

    #[test]
    fn certification_beyond_the_limit_is_refused() {
        assert_eq!(
            verify_universal(&[0], 5).unwrap_err(),
            UxsError::ExplosionCap { limit: CERTIFY_LIMIT }
        );
    }

    #[test]
    fn no_shipped_sequence_for_large_n() {
        assert_eq!(certified(50).unwrap_err(), UxsError::NoCertifiedSequence { n: 50 });
    }

    #[test]
    fn instance_search_certifies_random_graphs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let g = gen::random_graph(7, 3, &mut rng);
            let seq = for_instance(&g, 1234, 200).expect("search succeeds");
            assert!(covers_instance(&g, seq.offsets()));
            assert_eq!(
                seq.certificate(),
                Certificate::VerifiedOnInstance { graph_hash: g.stable_hash() }
            );
        }
    }

    #[test]
    fn shipped_sequences_cover_their_full_size_class() {
        for n in 2..=4 {
            let seq = certified(n).expect("shipped");
            assert_eq!(seq.certificate(), Certificate::BruteForceCertified { n_max: n });
            assert_eq!(
                verify_universal(seq.offsets(), n).expect("within the limit"),
                Ok(()),
                "shipped sequence for n = {n} left a gap"
            );
        }
    }

    /// Every step of an applied sequence moves, so on a two-colorable
    /// graph the trace must alternate sides at every index.
    #[test]
    fn applied_walks_alternate_sides_on_two_colorable_graphs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let seq = certified(4).expect("shipped");
        for _ in 0..30 {
            let g = gen::random_bipartite(4, 2, &mut rng);
            let classes = g.bipartition().expect("two-colorable by construction");
            for start in 0..g.n() {
                let trace = apply(&g, start, seq.offsets());
                for pair in trace.windows(2) {
                    assert_ne!(classes[pair[0]], classes[pair[1]]);
                }
            }
        }
    }

    #[test]
    #[ignore = "dev-time search used to produce the shipped constants"]
    fn find_shipped_sequences() {
        for len in [12, 16, 20, 24, 32, 48, 64] {
            if let Ok(offsets) = search_universal(4, len, 20240817, 40_000) {
                println!("n_max=4 len={len}: {offsets:?}");
                break;
            }
            println!("n_max=4 len={len}: not found");
        }
    }
}
