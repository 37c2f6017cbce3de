//! Undirected social graph: edge-list loading, a seeded preferential-attachment
//! generator, and the Pearson structural similarity of adjacency rows that
//! local trust is built on.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use log::warn;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index in `0..node_count`.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge list not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error reading edge list: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error on line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("graph has no edges after cleaning")]
    EmptyGraph,
    #[error("invalid generator parameters n={n}, m={m}: need n >= m + 1 >= 2")]
    InvalidParameters { n: usize, m: usize },
    #[error("node {node} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
}

/// Where a graph comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphSource {
    EdgeListFile(PathBuf),
    SyntheticScaleFree { n: usize, m: usize, seed: u64 },
}

/// Counters collected while cleaning an edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub lines_read: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

/// Simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
    /// External id for each dense node, when the graph was densified from a file.
    external_ids: Option<Vec<u64>>,
}

impl SocialGraph {
    /// Builds a graph over `node_count` nodes from arbitrary pairs. Self-loops are
    /// dropped and duplicate or reversed pairs collapse to one edge.
    pub fn from_edges(
        node_count: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let (graph, _) = Self::build(node_count, pairs)?;
        Ok(graph)
    }

    fn build(
        node_count: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<(Self, LoadStats), GraphError> {
        let mut stats = LoadStats::default();
        let mut edges = BTreeSet::new();
        for (a, b) in pairs {
            for node in [a, b] {
                if node >= node_count {
                    return Err(GraphError::NodeOutOfRange { node, node_count });
                }
            }
            if a == b {
                stats.self_loops_dropped += 1;
                continue;
            }
            if !edges.insert((a.min(b), a.max(b))) {
                stats.duplicates_collapsed += 1;
            }
        }
        if edges.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        let graph = SocialGraph {
            adjacency,
            edge_count: edges.len(),
            external_ids: None,
        };
        Ok((graph, stats))
    }

    /// Parses a KONECT-style edge list. Lines starting with `%` or `#` are
    /// comments; columns after the first two are ignored. External ids are
    /// densified in ascending order.
    pub fn from_edge_list<R: Read>(reader: R) -> Result<(Self, LoadStats), GraphError> {
        let mut raw = Vec::new();
        let mut lines_read = 0;
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            lines_read += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let mut next_id = |which: &str| -> Result<u64, GraphError> {
                let token = fields.next().ok_or_else(|| GraphError::ParseError {
                    line: idx + 1,
                    reason: format!("missing {which} node id"),
                })?;
                token.parse::<u64>().map_err(|e| GraphError::ParseError {
                    line: idx + 1,
                    reason: format!("bad {which} node id {token:?}: {e}"),
                })
            };
            let a = next_id("source")?;
            let b = next_id("target")?;
            raw.push((a, b));
        }

        let ids: BTreeSet<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
        let dense: BTreeMap<u64, NodeId> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let (mut graph, mut stats) = Self::build(ids.len(), raw.iter().map(|(a, b)| (dense[a], dense[b])))?;
        stats.lines_read = lines_read;
        if stats.self_loops_dropped > 0 {
            warn!(
                "dropped {} self-loop(s) while loading edge list",
                stats.self_loops_dropped
            );
        }
        graph.external_ids = Some(ids.into_iter().collect());
        Ok((graph, stats))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Ascending `(a, b)` pairs with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    /// Mapping from dense index to the id used in the source file.
    pub fn external_ids(&self) -> Option<&[u64]> {
        self.external_ids.as_deref()
    }

    pub fn external_id(&self, node: NodeId) -> u64 {
        match &self.external_ids {
            Some(ids) => ids[node],
            None => node as u64,
        }
    }

    /// Edge list in the on-disk format, one `a b` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count * 12);
        for (a, b) in self.edges() {
            out.push_str(&format!("{} {}\n", self.external_id(a), self.external_id(b)));
        }
        out
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node,
                node_count: self.node_count(),
            })
        }
    }

    /// Number of neighbors shared by `a` and `b`.
    pub fn common_neighbors(&self, a: NodeId, b: NodeId) -> usize {
        let (mut x, mut y) = (self.adjacency[a].iter().peekable(), self.adjacency[b].iter().peekable());
        let mut count = 0;
        while let (Some(&&p), Some(&&q)) = (x.peek(), y.peek()) {
            match p.cmp(&q) {
                std::cmp::Ordering::Less => {
                    x.next();
                }
                std::cmp::Ordering::Greater => {
                    y.next();
                }
                std::cmp::Ordering::Equal => {
                    count += 1;
                    x.next();
                    y.next();
                }
            }
        }
        count
    }

    /// Pearson correlation of the full 0/1 adjacency rows of `i` and `j`.
    ///
    /// With degrees `d_i`, `d_j`, `c` shared neighbors and `n` nodes the row
    /// covariance sum is `c - d_i d_j / n` and each variance sum is
    /// `d - d^2 / n`, so the dense rows never have to be materialized.
    /// A zero-variance row yields 0. With a zero diagonal that only happens
    /// for isolated nodes.
    pub fn pearson_similarity(&self, i: NodeId, j: NodeId) -> Result<f64, GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        let n = self.node_count() as f64;
        let di = self.degree(i) as f64;
        let dj = self.degree(j) as f64;
        let var_i = di - di * di / n;
        let var_j = dj - dj * dj / n;
        if var_i <= 0.0 || var_j <= 0.0 {
            return Ok(0.0);
        }
        let common = self.common_neighbors(i, j) as f64;
        let cov = common - di * dj / n;
        Ok((cov / (var_i * var_j).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Loads or generates the graph named by `source`.
pub fn load_graph(source: &GraphSource) -> Result<(SocialGraph, LoadStats), GraphError> {
    match source {
        GraphSource::EdgeListFile(path) => load_edge_list_file(path),
        GraphSource::SyntheticScaleFree { n, m, seed } => {
            Ok((preferential_attachment(*n, *m, *seed)?, LoadStats::default()))
        }
    }
}

fn load_edge_list_file(path: &Path) -> Result<(SocialGraph, LoadStats), GraphError> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => GraphError::FileNotFound(path.to_path_buf()),
        _ => GraphError::Io(e),
    })?;
    SocialGraph::from_edge_list(file)
}

/// Barabási–Albert style growth: a clique on the first `m` nodes, then every
/// new node attaches to `m` distinct existing nodes chosen with probability
/// proportional to degree. Yields `C(m, 2) + m (n - m)` edges.
pub fn preferential_attachment(n: usize, m: usize, seed: u64) -> Result<SocialGraph, GraphError> {
    if m < 1 || n < m + 1 {
        return Err(GraphError::InvalidParameters { n, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 + m * (n - m));
    // every edge contributes both endpoints, so sampling from this list is degree-proportional
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * edges.capacity());
    for a in 0..m {
        for b in (a + 1)..m {
            edges.push((a, b));
            endpoints.extend([a, b]);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for node in m..n {
        targets.clear();
        while targets.len() < m {
            let candidate = if endpoints.is_empty() {
                rng.gen_range(0..node)
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            if !targets.contains(&candidate) {
                targets.push(candidate);
            }
        }
        for &t in &targets {
            edges.push((t, node));
            endpoints.extend([t, node]);
        }
    }
    SocialGraph::from_edges(n, edges)
}

/// Hill estimate of the power-law exponent `gamma` of a degree distribution
/// (`P(k) ~ k^-gamma`), fitted on the largest `tail_fraction` of the sample.
/// Returns `None` when the tail is too short or degenerate.
pub fn hill_exponent(degrees: &[usize], tail_fraction: f64) -> Option<f64> {
    let mut sorted: Vec<f64> = degrees.iter().filter(|&&d| d > 0).map(|&d| d as f64).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((sorted.len() as f64) * tail_fraction).ceil() as usize;
    if k < 2 || k >= sorted.len() {
        return None;
    }
    let floor = sorted[k];
    let log_sum: f64 = sorted[..k].iter().map(|x| (x / floor).ln()).sum();
    if log_sum <= 0.0 {
        return None;
    }
    Some(1.0 + k as f64 / log_sum)
}
