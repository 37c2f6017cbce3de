//! Hop-limited, trust-gated propagation experiment.
//!
//! Each seed node injects one message on one of its topics. The message then
//! moves outward hop by hop through neighbors that share the topic. At every
//! hop the receivers act as validators: they weigh the origin's published
//! credibility by the origin's trust in each of them and compare it with the
//! average credibility around the propagating nodes. A pass moves the message
//! on and raises the receivers' trust in the origin; a block stops it, lowers
//! that trust, and demotes the origin's credibility on its chain. A message is
//! labelled true only if no hop blocks it.

use std::collections::BTreeMap;

use log::debug;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    Chain, ChainError, DigestBody, MessageDigest, MessageRef, NodeProperty, NodeService, DEFAULT_MAX_LEN,
};
use crate::graph::{load_graph, GraphError, GraphSource, NodeId, SocialGraph};
use crate::rng::{stream, Stream};
use crate::trust::{
    assign_profiles, block_info_weight, decide, validation_threshold, weighted_credibility, Decision, NodeProfile,
    Polarity, Prevalence, Topic, TrustError, TrustLedger,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("no events for topic {0}")]
    EmptyTopic(Topic),
}

/// How node credibilities are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CredibilityModel {
    /// Uniform draws in `[0, 1)` per node and topic.
    #[default]
    Uniform,
    /// As `Uniform`, but while its message propagates, each seed's credibility on
    /// the message topic is forced to 0 or 1 (fair coin), which makes the
    /// message's truth certain.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub graph_source: GraphSource,
    pub seed: u64,
    pub num_seeds: usize,
    pub max_hops: usize,
    pub max_chain_len: usize,
    pub topic_prevalence: Prevalence,
    pub fan_in_cap: Option<usize>,
    pub clamp_trust: bool,
    pub credibility_model: CredibilityModel,
}

impl SimConfig {
    pub fn new(graph_source: GraphSource, seed: u64) -> Self {
        SimConfig {
            graph_source,
            seed,
            num_seeds: 100,
            max_hops: 6,
            max_chain_len: DEFAULT_MAX_LEN,
            topic_prevalence: Prevalence::survey_default(),
            fan_in_cap: None,
            clamp_trust: true,
            credibility_model: CredibilityModel::Uniform,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_seeds == 0 {
            return Err(SimError::Config("num_seeds must be positive".into()));
        }
        if self.max_hops == 0 {
            return Err(SimError::Config("max_hops must be at least 1".into()));
        }
        if self.max_chain_len == 0 {
            return Err(SimError::Config("max_chain_len must be positive".into()));
        }
        if self.fan_in_cap == Some(0) {
            return Err(SimError::Config("fan_in_cap must be positive when set".into()));
        }
        self.topic_prevalence.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detection {
    T,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoMessage {
    pub message_id: u64,
    pub origin: NodeId,
    pub topic: Topic,
    pub ground_truth: bool,
    pub created_at: u64,
}

/// Raw (pre-clamp) trust movement across one hop's receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustUpdateSummary {
    pub count: usize,
    pub clamped: usize,
    pub raw_min: f64,
    pub raw_max: f64,
}

impl Default for TrustUpdateSummary {
    fn default() -> Self {
        TrustUpdateSummary {
            count: 0,
            clamped: 0,
            raw_min: f64::INFINITY,
            raw_max: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub hop: usize,
    pub validators: Vec<NodeId>,
    pub score: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub trust_updates: TrustUpdateSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationEvent {
    pub message: InfoMessage,
    pub hops: Vec<HopRecord>,
    pub final_label: Detection,
    pub detection_level: usize,
    /// The message ran out of interested, unreached nodes before `max_hops`.
    pub exhausted: bool,
    pub diagnostics: Vec<String>,
}

impl PropagationEvent {
    pub fn is_correct(&self) -> bool {
        (self.final_label == Detection::T) == self.message.ground_truth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic: Topic,
    pub messages: usize,
    pub labelled_true: usize,
    pub labelled_false: usize,
    pub actually_true: usize,
    pub correct: usize,
    pub mean_detection_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    /// Dense index → id in the source edge list, for file-backed graphs.
    pub external_ids: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SimConfig,
    pub graph: GraphSummary,
    pub events: Vec<PropagationEvent>,
    pub accuracy: f64,
    /// Accuracy of labelling every message true.
    pub baseline_accuracy: f64,
    pub topics: Vec<TopicSummary>,
    pub chains: BTreeMap<NodeId, Chain>,
}

impl RunReport {
    pub fn external_id(&self, node: NodeId) -> u64 {
        match &self.graph.external_ids {
            Some(ids) => ids[node],
            None => node as u64,
        }
    }
}

/// Fraction of events whose label matches the planted truth.
pub fn accuracy(events: &[PropagationEvent]) -> f64 {
    if events.is_empty() {
        return 0.0;
    }
    events.iter().filter(|e| e.is_correct()).count() as f64 / events.len() as f64
}

pub fn baseline_accuracy(events: &[PropagationEvent]) -> f64 {
    if events.is_empty() {
        return 0.0;
    }
    events.iter().filter(|e| e.message.ground_truth).count() as f64 / events.len() as f64
}

pub fn mean_detection_level(events: &[PropagationEvent], topic: Topic) -> Result<f64, SimError> {
    let levels: Vec<usize> = events
        .iter()
        .filter(|e| e.message.topic == topic)
        .map(|e| e.detection_level)
        .collect();
    if levels.is_empty() {
        return Err(SimError::EmptyTopic(topic));
    }
    Ok(levels.iter().sum::<usize>() as f64 / levels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionStat {
    pub raw: f64,
    /// Rounded to the nearest hop, halves away from zero.
    pub table: u64,
}

/// Mean detection level per topic that has at least one event.
pub fn detection_level_stats(report: &RunReport) -> BTreeMap<Topic, DetectionStat> {
    Topic::ALL
        .into_iter()
        .filter_map(|t| {
            let raw = mean_detection_level(&report.events, t).ok()?;
            Some((
                t,
                DetectionStat {
                    raw,
                    table: raw.round() as u64,
                },
            ))
        })
        .collect()
}

fn topic_summaries(events: &[PropagationEvent]) -> Vec<TopicSummary> {
    Topic::ALL
        .into_iter()
        .map(|topic| {
            let of_topic: Vec<&PropagationEvent> = events.iter().filter(|e| e.message.topic == topic).collect();
            TopicSummary {
                topic,
                messages: of_topic.len(),
                labelled_true: of_topic.iter().filter(|e| e.final_label == Detection::T).count(),
                labelled_false: of_topic.iter().filter(|e| e.final_label == Detection::F).count(),
                actually_true: of_topic.iter().filter(|e| e.message.ground_truth).count(),
                correct: of_topic.iter().filter(|e| e.is_correct()).count(),
                mean_detection_level: mean_detection_level(events, topic).ok(),
            }
        })
        .collect()
}

/// Loads the configured graph and runs the experiment on it.
pub fn run_simulation(config: &SimConfig) -> Result<RunReport, SimError> {
    config.validate()?;
    let (graph, _) = load_graph(&config.graph_source)?;
    run_on_graph(&graph, config)
}

/// Runs the experiment on an already-loaded graph. `config.graph_source` is
/// only recorded, not re-read.
pub fn run_on_graph(graph: &SocialGraph, config: &SimConfig) -> Result<RunReport, SimError> {
    let mut profiles = assign_profiles(
        graph,
        &config.topic_prevalence,
        &mut stream(config.seed, Stream::Profiles),
    )?;
    run_with_profiles(graph, config, &mut profiles)
}

/// Runs the experiment with caller-supplied profiles (mutated by blocking
/// demotions as the run proceeds).
pub fn run_with_profiles(
    graph: &SocialGraph,
    config: &SimConfig,
    profiles: &mut [NodeProfile],
) -> Result<RunReport, SimError> {
    config.validate()?;
    if profiles.len() != graph.node_count() {
        return Err(SimError::Config(format!(
            "{} profiles for {} nodes",
            profiles.len(),
            graph.node_count()
        )));
    }
    let candidates: Vec<NodeId> = (0..graph.node_count()).filter(|&n| graph.degree(n) > 0).collect();
    if config.num_seeds > candidates.len() {
        return Err(SimError::Config(format!(
            "num_seeds {} exceeds the {} nodes with at least one neighbor",
            config.num_seeds,
            candidates.len()
        )));
    }

    let mut message_rng = stream(config.seed, Stream::Messages);
    let mut tie_rng = stream(config.seed, Stream::TieBreak);
    let origins: Vec<NodeId> = index::sample(&mut message_rng, candidates.len(), config.num_seeds)
        .into_iter()
        .map(|i| candidates[i])
        .collect();

    let mut state = Propagation {
        graph,
        config,
        profiles,
        ledger: TrustLedger::new(config.clamp_trust),
        chains: BTreeMap::new(),
    };
    let ticks_per_message = (config.max_hops + 1) as u64;
    let mut events = Vec::with_capacity(origins.len());
    for (k, &origin) in origins.iter().enumerate() {
        let topics: Vec<Topic> = state.profiles[origin].interests.iter().collect();
        let topic = *topics.choose(&mut message_rng).expect("interests are never empty");
        // the oracle value belongs to this message only; later thresholds see the
        // node's own credibility again
        let restore = (config.credibility_model == CredibilityModel::Oracle).then(|| {
            let previous = state.profiles[origin].credibility.get(topic);
            let forced = if message_rng.gen::<bool>() { 1.0 } else { 0.0 };
            state.profiles[origin].credibility.set(topic, forced);
            previous
        });
        let ground_truth = message_rng.gen::<f64>() < state.profiles[origin].credibility.get(topic);
        let message = InfoMessage {
            message_id: k as u64,
            origin,
            topic,
            ground_truth,
            created_at: k as u64 * ticks_per_message,
        };
        events.push(state.propagate(message, &mut tie_rng));
        if let Some(previous) = restore {
            state.profiles[origin].credibility.set(topic, previous);
        }
    }

    Ok(RunReport {
        config: config.clone(),
        graph: GraphSummary {
            node_count: graph.node_count(),
            edge_count: graph.edge_count(),
            external_ids: graph.external_ids().map(<[u64]>::to_vec),
        },
        accuracy: accuracy(&events),
        baseline_accuracy: baseline_accuracy(&events),
        topics: topic_summaries(&events),
        events,
        chains: state.chains,
    })
}

struct Propagation<'a> {
    graph: &'a SocialGraph,
    config: &'a SimConfig,
    profiles: &'a mut [NodeProfile],
    ledger: TrustLedger,
    chains: BTreeMap<NodeId, Chain>,
}

impl Propagation<'_> {
    fn interested(&self, node: NodeId, topic: Topic) -> bool {
        self.profiles[node].interests.contains(topic)
    }

    fn propagate<R: Rng>(&mut self, message: InfoMessage, tie_rng: &mut R) -> PropagationEvent {
        let InfoMessage { origin, topic, .. } = message;
        let graph = self.graph;
        let mut diagnostics = Vec::new();
        let published = self.profiles[origin].credibility.get(topic);
        let np = NodeProperty {
            node_id: origin,
            credibility: self.profiles[origin].credibility,
            info_type: topic,
        };

        let mut visited = vec![false; graph.node_count()];
        visited[origin] = true;
        let mut first: Vec<NodeId> = graph
            .neighbors(origin)
            .iter()
            .copied()
            .filter(|&n| self.interested(n, topic))
            .collect();
        if first.is_empty() {
            first = graph.neighbors(origin).to_vec();
        }

        let ns_trust = {
            let sum: f64 = first
                .iter()
                .map(|&n| self.ledger.local_trust(graph, origin, n).expect("neighbor"))
                .sum();
            sum / first.len() as f64
        };
        let simd = MessageDigest::simd(
            np.clone(),
            NodeService {
                message: MessageRef {
                    message_id: message.message_id,
                    topic,
                    origin,
                },
                local_trust: ns_trust,
            },
        );
        let mut chain = Chain::with_genesis(
            self.config.max_chain_len,
            vec![simd],
            message.created_at,
            block_info_weight(&[(published, published)]),
        )
        .expect("capacity validated");

        let mut hops = Vec::new();
        let mut frontier = vec![origin];
        let mut receivers = first;
        let mut blocked = false;
        for hop in 1..=self.config.max_hops {
            if hop > 1 {
                let mut next: Vec<NodeId> = frontier
                    .iter()
                    .flat_map(|&p| graph.neighbors(p).iter().copied())
                    .filter(|&n| !visited[n] && self.interested(n, topic))
                    .collect();
                next.sort_unstable();
                next.dedup();
                receivers = next;
            }
            if receivers.is_empty() {
                break;
            }
            for &r in &receivers {
                visited[r] = true;
            }

            let validators = match self.config.fan_in_cap {
                Some(cap) if cap < receivers.len() => {
                    let mut picked: Vec<NodeId> = index::sample(tie_rng, receivers.len(), cap)
                        .into_iter()
                        .map(|i| receivers[i])
                        .collect();
                    picked.sort_unstable();
                    picked
                }
                _ => receivers.clone(),
            };

            let weights: Vec<f64> = validators
                .iter()
                .map(|&v| self.ledger.trust_in(graph, self.profiles, origin, v))
                .collect();
            let entries: Vec<(f64, f64)> = weights.iter().map(|&w| (w, published)).collect();
            let score = match weighted_credibility(&entries) {
                Ok(s) => s,
                Err(e) => {
                    diagnostics.push(format!("hop {hop}: {e}; using unweighted mean"));
                    published
                }
            };

            let thresholds: Vec<f64> = frontier
                .iter()
                .filter_map(|&p| validation_threshold(graph, self.profiles, p, topic).ok())
                .collect();
            let threshold = thresholds.iter().sum::<f64>() / thresholds.len() as f64;
            let decision = decide(score, threshold);

            let polarity = match decision {
                Decision::Validated => Polarity::Positive,
                Decision::Blocked => Polarity::Negative,
            };
            let mut summary = TrustUpdateSummary::default();
            for &r in &receivers {
                let pairs = self.ledger.intermediaries(graph, self.profiles, r, origin);
                let update = self.ledger.apply_update(self.profiles, r, origin, &pairs, polarity);
                summary.count += 1;
                if update.raw != update.stored || !(0.0..=1.0).contains(&update.raw) {
                    summary.clamped += 1;
                }
                summary.raw_min = summary.raw_min.min(update.raw);
                summary.raw_max = summary.raw_max.max(update.raw);
            }

            // the miner commits the hop verdict under the heaviest-trusted validator
            let verifier = validators
                .iter()
                .zip(&weights)
                .fold(None::<(NodeId, f64)>, |best, (&v, &w)| match best {
                    Some((_, bw)) if bw >= w => best,
                    _ => Some((v, w)),
                })
                .map(|(v, _)| v)
                .expect("validators non-empty");
            let mut digests = vec![
                MessageDigest::new(
                    DigestBody::Miner {
                        block_ref: chain.tip_hash(),
                    },
                    &np,
                ),
                MessageDigest::new(
                    DigestBody::Verification {
                        message_id: message.message_id,
                        verifier,
                        decision,
                        score,
                    },
                    &np,
                ),
            ];
            if decision == Decision::Blocked {
                self.profiles[origin].credibility.set(topic, score);
                digests.push(MessageDigest::new(
                    DigestBody::Blocking {
                        message_id: message.message_id,
                        origin,
                        new_credibility: self.profiles[origin].credibility,
                    },
                    &np,
                ));
            }
            let info_weight = block_info_weight(
                &validators
                    .iter()
                    .map(|&v| (published, self.profiles[v].credibility.get(topic)))
                    .collect::<Vec<_>>(),
            );
            match chain.append_block(digests, message.created_at + hop as u64, info_weight) {
                Ok(_) => {}
                Err(e @ ChainError::ChainFull(_)) => diagnostics.push(format!("hop {hop}: {e}; block not recorded")),
                Err(e) => diagnostics.push(format!("hop {hop}: {e}")),
            }

            hops.push(HopRecord {
                hop,
                validators,
                score,
                threshold,
                decision,
                trust_updates: summary,
            });
            if decision == Decision::Blocked {
                blocked = true;
                break;
            }
            frontier = std::mem::take(&mut receivers);
        }

        let exhausted = !blocked && hops.len() < self.config.max_hops;
        // nothing left to reject it: it has passed every hop it can reach
        let detection_level = if exhausted { self.config.max_hops } else { hops.len() };
        debug!(
            "message {} from {origin} ({topic}): {} after {} hop(s)",
            message.message_id,
            if blocked { "blocked" } else { "validated" },
            hops.len()
        );
        self.chains.insert(origin, chain);
        PropagationEvent {
            message,
            hops,
            final_label: if blocked { Detection::F } else { Detection::T },
            detection_level,
            exhausted,
            diagnostics,
        }
    }
}
