//! Trust-gated information propagation over social graphs.
//!
//! - [`graph`]: undirected social graph, loading and generation, structural similarity.
//! - [`trust`]: node profiles, local/global trust, credibility scoring and the propagate/block gate.
//! - [`chain`]: hash-chained propagation records with tamper detection and source tracing.
//! - [`sim`]: the hop-limited propagation experiment and its accuracy / detection metrics.

pub mod chain;
pub mod graph;
pub mod rng;
pub mod sim;
pub mod trust;

pub use graph::{load_graph, GraphSource, NodeId, SocialGraph};
pub use trust::{Decision, Topic};
