//! Two anonymous agents gathering on a port-labeled graph without meeting.
//!
//! The library models synchronous agents on anonymous, port-labeled graphs
//! whose wake-up rounds are chosen adversarially.  Agents may never occupy
//! the same node at the end of a round; the goal is that their visited sets
//! jointly cover the whole graph and both agents eventually terminate.
//!
//! Modules, bottom up:
//!
//! * [`graph`]: port-labeled graphs, validation, BFS, lexicographic
//!   shortest-path selection.
//! * [`gen`]: instance generators (exhaustive small enumeration, seeded
//!   random graphs, the four-node lower-bound family).
//! * [`bfs`]: anonymous first-visit order and the path decomposition
//!   that drives pebble placement.
//! * [`pebbles`]: role assignment and pebble placement for both modes.
//! * [`uxs`]: universal exploration sequences and their verification.
//! * [`agent`]: the per-agent state machines (pure perception-to-action).
//! * [`sim`]: the synchronous round engine, traces and outcomes.
//! * [`verify`]: trace checking, sweeps, and the lower-bound refutation.

#![forbid(unsafe_code)]

pub mod agent;
pub mod bfs;
pub mod gen;
pub mod graph;
pub mod pebbles;
pub mod sim;
pub mod uxs;
pub mod verify;
