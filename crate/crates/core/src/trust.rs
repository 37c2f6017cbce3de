//! Node profiles, local and global trust, and the credibility arithmetic used
//! to gate propagation.
//!
//! Local trust between neighbors is the Pearson similarity of their adjacency
//! rows. Global trust `T(r, s)` is a directed record of receiver `r` in sender
//! `s`, moved up or down after every verdict by the trust-weighted opinion of
//! `r`'s neighbors about `s`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, SocialGraph};

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("nodes {0} and {1} are not neighbors")]
    NotNeighbors(NodeId, NodeId),
    #[error("no validators supplied")]
    NoValidators,
    #[error("validator trust weights sum to zero")]
    ZeroTrustMass,
    #[error("node {0} has no neighbors")]
    IsolatedNode(NodeId),
    #[error("prevalence for {topic} must lie in (0, 1], got {value}")]
    BadPrevalence { topic: Topic, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Topic {
    Pol,
    Tech,
    Movie,
    Research,
}

impl Topic {
    pub const ALL: [Topic; 4] = [Topic::Pol, Topic::Tech, Topic::Movie, Topic::Research];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Topic> {
        Self::ALL.get(ordinal as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Topic::Pol => "Pol",
            Topic::Tech => "Tech",
            Topic::Movie => "Movie",
            Topic::Research => "Research",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown topic {s:?}"))
    }
}

/// One value per topic, indexed by ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerTopic<T>(pub [T; 4]);

impl<T: Copy> PerTopic<T> {
    pub fn splat(value: T) -> Self {
        PerTopic([value; 4])
    }

    pub fn get(&self, topic: Topic) -> T {
        self.0[topic as usize]
    }

    pub fn set(&mut self, topic: Topic, value: T) {
        self.0[topic as usize] = value;
    }
}

/// Probability that a node lists each topic among its interests.
pub type Prevalence = PerTopic<f64>;

impl Prevalence {
    /// Pol, Tech and Movie follow the social-media survey shares (politics,
    /// science/tech, and religion respectively); Research has no published share.
    pub fn survey_default() -> Self {
        PerTopic([0.66, 0.68, 0.58, 0.50])
    }

    pub fn validate(&self) -> Result<(), TrustError> {
        for topic in Topic::ALL {
            let value = self.get(topic);
            if !(value > 0.0 && value <= 1.0) {
                return Err(TrustError::BadPrevalence { topic, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSet(u8);

impl TopicSet {
    pub fn contains(self, topic: Topic) -> bool {
        self.0 & (1 << topic.ordinal()) != 0
    }

    pub fn insert(&mut self, topic: Topic) {
        self.0 |= 1 << topic.ordinal();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Topic> {
        Topic::ALL.into_iter().filter(move |&t| self.contains(t))
    }
}

impl FromIterator<Topic> for TopicSet {
    fn from_iter<I: IntoIterator<Item = Topic>>(iter: I) -> Self {
        let mut set = TopicSet::default();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub node_id: NodeId,
    pub interests: TopicSet,
    pub credibility: PerTopic<f64>,
    pub initial_trust: f64,
}

/// Draws interests, per-topic credibility and initial trust for every node.
///
/// Per node, in order: one Bernoulli draw per topic, a uniform topic pick if
/// the set came out empty, four uniform credibilities, one uniform initial trust.
pub fn assign_profiles<R: Rng>(
    graph: &SocialGraph,
    prevalence: &Prevalence,
    rng: &mut R,
) -> Result<Vec<NodeProfile>, TrustError> {
    prevalence.validate()?;
    let profiles = (0..graph.node_count())
        .map(|node_id| {
            let mut interests: TopicSet = Topic::ALL
                .into_iter()
                .filter(|&t| rng.gen::<f64>() < prevalence.get(t))
                .collect();
            if interests.is_empty() {
                interests.insert(*Topic::ALL.choose(rng).expect("four topics"));
            }
            let credibility = PerTopic([rng.gen(), rng.gen(), rng.gen(), rng.gen()]);
            NodeProfile {
                node_id,
                interests,
                credibility,
                initial_trust: rng.gen(),
            }
        })
        .collect();
    Ok(profiles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Validated,
    Blocked,
}

impl Decision {
    pub fn ordinal(self) -> u8 {
        self as u8
    }
}

/// Strictly greater passes; ties block.
pub fn decide(score: f64, threshold: f64) -> Decision {
    if score > threshold {
        Decision::Validated
    } else {
        Decision::Blocked
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// `Σ T(r,j) T(j,s) / Σ T(r,j)` over `(T(r,j), T(j,s))` pairs with positive
/// `T(r,j)`. `None` when nothing contributes.
pub fn neighborhood_opinion(pairs: &[(f64, f64)]) -> Option<f64> {
    let (num, den) = pairs
        .iter()
        .filter(|(to_j, _)| *to_j > 0.0)
        .fold((0.0, 0.0), |(num, den), (to_j, j_to_s)| {
            (num + to_j * j_to_s, den + to_j)
        });
    (den > 0.0).then(|| num / den)
}

/// Signed change a verdict applies to the base: `+opinion` when validated,
/// `-opinion` when blocked, zero when no neighbor contributes.
pub fn trust_increment(pairs: &[(f64, f64)], polarity: Polarity) -> f64 {
    let opinion = neighborhood_opinion(pairs).unwrap_or(0.0);
    match polarity {
        Polarity::Positive => opinion,
        Polarity::Negative => -opinion,
    }
}

/// Unclamped trust after a verdict: the base moves up (validated) or down
/// (blocked) by the neighborhood opinion of the sender.
pub fn raw_trust_update(base: f64, pairs: &[(f64, f64)], polarity: Polarity) -> f64 {
    base + trust_increment(pairs, polarity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustUpdate {
    pub base: f64,
    pub increment: f64,
    pub raw: f64,
    pub stored: f64,
}

#[derive(Debug, Clone)]
pub struct TrustLedger {
    local: HashMap<(NodeId, NodeId), f64>,
    global: HashMap<(NodeId, NodeId), f64>,
    clamp: bool,
}

impl Default for TrustLedger {
    fn default() -> Self {
        Self::new(true)
    }
}

impl TrustLedger {
    /// `clamp` keeps stored global trust inside `[0, 1]`.
    pub fn new(clamp: bool) -> Self {
        TrustLedger {
            local: HashMap::new(),
            global: HashMap::new(),
            clamp,
        }
    }

    /// Memoized Pearson similarity of two adjacent nodes.
    pub fn local_trust(&mut self, graph: &SocialGraph, i: NodeId, j: NodeId) -> Result<f64, TrustError> {
        if i >= graph.node_count() || j >= graph.node_count() || !graph.are_adjacent(i, j) {
            return Err(TrustError::NotNeighbors(i, j));
        }
        let key = (i.min(j), i.max(j));
        if let Some(&v) = self.local.get(&key) {
            return Ok(v);
        }
        let v = graph
            .pearson_similarity(key.0, key.1)
            .expect("adjacent nodes are in range");
        self.local.insert(key, v);
        Ok(v)
    }

    pub fn global(&self, receiver: NodeId, sender: NodeId) -> Option<f64> {
        self.global.get(&(receiver, sender)).copied()
    }

    pub fn set_global(&mut self, receiver: NodeId, sender: NodeId, value: f64) {
        self.global.insert((receiver, sender), value);
    }

    pub fn global_len(&self) -> usize {
        self.global.len()
    }

    /// Trust `a` places in `b`: the global record, else local trust when
    /// adjacent, else `b`'s initial trust. Never negative.
    pub fn trust_in(&mut self, graph: &SocialGraph, profiles: &[NodeProfile], a: NodeId, b: NodeId) -> f64 {
        let value = match self.global(a, b) {
            Some(v) => v,
            None => match self.local_trust(graph, a, b) {
                Ok(v) => v,
                Err(_) => profiles[b].initial_trust,
            },
        };
        value.clamp(0.0, 1.0)
    }

    /// `(T(r,j), T(j,s))` for every neighbor `j` of `r` (other than `s`) that
    /// `r` trusts positively.
    pub fn intermediaries(
        &mut self,
        graph: &SocialGraph,
        profiles: &[NodeProfile],
        receiver: NodeId,
        sender: NodeId,
    ) -> Vec<(f64, f64)> {
        let mut pairs = Vec::with_capacity(graph.degree(receiver));
        for &j in graph.neighbors(receiver) {
            if j == sender {
                continue;
            }
            let to_j = match self.global(receiver, j) {
                Some(v) => v,
                None => self.local_trust(graph, receiver, j).expect("neighbor"),
            };
            if to_j > 0.0 {
                pairs.push((to_j, self.trust_in(graph, profiles, j, sender)));
            }
        }
        pairs
    }

    /// Applies a verdict to `T(r, s)`. The base is the current record, lazily
    /// initialized from the sender's initial trust.
    pub fn apply_update(
        &mut self,
        profiles: &[NodeProfile],
        receiver: NodeId,
        sender: NodeId,
        intermediaries: &[(f64, f64)],
        polarity: Polarity,
    ) -> TrustUpdate {
        let base = self.global(receiver, sender).unwrap_or(profiles[sender].initial_trust);
        let increment = trust_increment(intermediaries, polarity);
        let raw = base + increment;
        let stored = if self.clamp { raw.clamp(0.0, 1.0) } else { raw };
        self.set_global(receiver, sender, stored);
        TrustUpdate {
            base,
            increment,
            raw,
            stored,
        }
    }

    pub fn update_positive(
        &mut self,
        profiles: &[NodeProfile],
        receiver: NodeId,
        sender: NodeId,
        intermediaries: &[(f64, f64)],
    ) -> TrustUpdate {
        self.apply_update(profiles, receiver, sender, intermediaries, Polarity::Positive)
    }

    pub fn update_negative(
        &mut self,
        profiles: &[NodeProfile],
        receiver: NodeId,
        sender: NodeId,
        intermediaries: &[(f64, f64)],
    ) -> TrustUpdate {
        self.apply_update(profiles, receiver, sender, intermediaries, Polarity::Negative)
    }
}

/// Trust-weighted mean of `(weight, credibility)` pairs.
pub fn weighted_credibility(entries: &[(f64, f64)]) -> Result<f64, TrustError> {
    if entries.is_empty() {
        return Err(TrustError::NoValidators);
    }
    let mass: f64 = entries.iter().map(|(w, _)| w).sum();
    if mass <= 0.0 {
        return Err(TrustError::ZeroTrustMass);
    }
    let weighted: f64 = entries.iter().map(|(w, c)| w * c).sum();
    // guard the last ulp so the result never leaves [min, max]
    let (lo, hi) = entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, c)| {
            (lo.min(*c), hi.max(*c))
        });
    Ok((weighted / mass).clamp(lo, hi))
}

/// Credibility score of `sender` on `topic` from the validators' own topic
/// credibilities, weighted by the sender's trust in each validator.
pub fn credibility_score(
    graph: &SocialGraph,
    profiles: &[NodeProfile],
    ledger: &mut TrustLedger,
    sender: NodeId,
    validators: &[NodeId],
    topic: Topic,
) -> Result<f64, TrustError> {
    let entries: Vec<(f64, f64)> = validators
        .iter()
        .map(|&v| {
            (
                ledger.trust_in(graph, profiles, sender, v),
                profiles[v].credibility.get(topic),
            )
        })
        .collect();
    weighted_credibility(&entries)
}

/// Mean topic credibility of the propagator's neighbors that care about the
/// topic, or of all its neighbors when none do.
pub fn validation_threshold(
    graph: &SocialGraph,
    profiles: &[NodeProfile],
    propagator: NodeId,
    topic: Topic,
) -> Result<f64, TrustError> {
    let neighbors = graph.neighbors(propagator);
    if neighbors.is_empty() {
        return Err(TrustError::IsolatedNode(propagator));
    }
    let mean = |nodes: &mut dyn Iterator<Item = &NodeId>| -> Option<f64> {
        let (sum, count) = nodes.fold((0.0, 0usize), |(s, c), &n| {
            (s + profiles[n].credibility.get(topic), c + 1)
        });
        (count > 0).then(|| sum / count as f64)
    };
    let interested = mean(&mut neighbors.iter().filter(|&&n| profiles[n].interests.contains(topic)));
    Ok(interested.unwrap_or_else(|| mean(&mut neighbors.iter()).expect("non-empty")))
}

/// Information weight of a block: `Σ value · cred` over its entries.
pub fn block_info_weight(entries: &[(f64, f64)]) -> f64 {
    entries.iter().map(|(value, cred)| value * cred).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::preferential_attachment;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn profile(node_id: NodeId, interests: &[Topic], cred: f64, initial_trust: f64) -> NodeProfile {
        NodeProfile {
            node_id,
            interests: interests.iter().copied().collect(),
            credibility: PerTopic::splat(cred),
            initial_trust,
        }
    }

    // scalar re-statement of the update rule
    fn eq_oracle(base: f64, pairs: &[(f64, f64)], sign: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(a, b) in pairs {
            if a > 0.0 {
                num += a * b;
                den += a;
            }
        }
        if den == 0.0 {
            base
        } else {
            base + sign * (num / den)
        }
    }

    #[test]
    fn topic_ordinals_are_stable() {
        let ords: Vec<u8> = Topic::ALL.iter().map(|t| t.ordinal()).collect();
        assert_eq!(ords, vec![0, 1, 2, 3]);
        assert_eq!(Topic::from_ordinal(3), Some(Topic::Research));
        assert_eq!(Topic::from_ordinal(4), None);
        assert_eq!("movie".parse::<Topic>().unwrap(), Topic::Movie);
    }

    #[test]
    fn certain_prevalence_gives_every_topic() {
        let g = preferential_attachment(50, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let profiles = assign_profiles(&g, &PerTopic::splat(1.0), &mut rng).unwrap();
        for p in &profiles {
            assert!(Topic::ALL.iter().all(|&t| p.interests.contains(t)));
            assert!(p.credibility.0.iter().all(|c| (0.0..1.0).contains(c)));
            assert!((0.0..1.0).contains(&p.initial_trust));
        }
    }

    #[test]
    fn profiles_are_deterministic() {
        let g = preferential_attachment(200, 2, 1).unwrap();
        let prev = Prevalence::survey_default();
        let a = assign_profiles(&g, &prev, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = assign_profiles(&g, &prev, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rare_prevalence_never_leaves_interests_empty() {
        let g = preferential_attachment(300, 2, 1).unwrap();
        let prev = PerTopic::splat(0.01);
        let profiles = assign_profiles(&g, &prev, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(profiles.iter().all(|p| !p.interests.is_empty()));
    }

    #[test]
    fn bad_prevalence_rejected() {
        let g = preferential_attachment(10, 2, 1).unwrap();
        let mut prev = Prevalence::survey_default();
        prev.set(Topic::Movie, 0.0);
        let err = assign_profiles(&g, &prev, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert_eq!(
            err,
            TrustError::BadPrevalence {
                topic: Topic::Movie,
                value: 0.0
            }
        );
    }

    #[test]
    fn survey_prevalence_matches_empirical_share() {
        let g = preferential_attachment(46_952, 3, 5).unwrap();
        let prev = Prevalence::survey_default();
        let profiles = assign_profiles(&g, &prev, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        for t in Topic::ALL {
            let share = profiles.iter().filter(|p| p.interests.contains(t)).count() as f64 / profiles.len() as f64;
            // the empty-set redraw adds at most P(empty)/4 ≈ 0.0012
            assert!((share - prev.get(t)).abs() < 0.01, "{t}: {share}");
        }
    }

    #[test]
    fn local_trust_on_triangle() {
        let g = SocialGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut ledger = TrustLedger::default();
        // rows [0,1,1] and [1,0,1]: (1 - 4/3) / (2 - 4/3)
        assert!((ledger.local_trust(&g, 0, 1).unwrap() - (-0.5)).abs() < 1e-12);
        assert_eq!(
            ledger.local_trust(&g, 1, 0).unwrap(),
            ledger.local_trust(&g, 0, 1).unwrap()
        );
    }

    #[test]
    fn local_trust_twins_and_non_neighbors() {
        // 0 and 1 adjacent, both also adjacent to 2 and 3; rows differ only at each other
        let g = SocialGraph::from_edges(6, [(0, 2), (0, 3), (1, 2), (1, 3), (4, 5)]).unwrap();
        let mut ledger = TrustLedger::default();
        assert!(matches!(
            ledger.local_trust(&g, 0, 1),
            Err(TrustError::NotNeighbors(0, 1))
        ));
        assert_eq!(g.pearson_similarity(0, 1).unwrap(), 1.0);
        let g = SocialGraph::from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let r = ledger.local_trust(&g, 0, 1).unwrap();
        assert!((r - g.pearson_similarity(0, 1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn positive_update_examples() {
        assert!((raw_trust_update(0.3, &[(1.0, 0.4)], Polarity::Positive) - 0.7).abs() < 1e-12);
        let pairs = [(0.5, 0.2), (0.25, 0.8)];
        let raw = raw_trust_update(0.1, &pairs, Polarity::Positive);
        assert!((raw - 0.5).abs() < 1e-12);
        assert!((raw - eq_oracle(0.1, &pairs, 1.0)).abs() < 1e-12);
        assert_eq!(raw_trust_update(0.42, &[], Polarity::Positive), 0.42);
        // zero denominator behaves like the empty list
        assert_eq!(raw_trust_update(0.42, &[(0.0, 0.9)], Polarity::Positive), 0.42);
    }

    #[test]
    fn negative_update_examples() {
        let profiles = vec![profile(0, &[Topic::Pol], 0.5, 0.9), profile(1, &[Topic::Pol], 0.5, 0.3)];
        let mut ledger = TrustLedger::default();
        let up = ledger.update_negative(&profiles, 0, 1, &[(1.0, 0.4)]);
        assert!((up.raw - (-0.1)).abs() < 1e-12);
        assert_eq!(up.stored, 0.0);
        assert_eq!(ledger.global(0, 1), Some(0.0));

        let up = ledger.update_negative(&profiles, 1, 0, &[(1.0, 0.4)]);
        assert!((up.stored - 0.5).abs() < 1e-12);

        let pairs = [(0.5, 0.2), (0.25, 0.8)];
        let raw = raw_trust_update(0.1, &pairs, Polarity::Negative);
        assert!((raw - (-0.3)).abs() < 1e-12);
        assert!((raw - eq_oracle(0.1, &pairs, -1.0)).abs() < 1e-12);
        assert_eq!(raw.clamp(0.0, 1.0), 0.0);
    }

    #[test]
    fn unclamped_ledger_keeps_raw() {
        let profiles = vec![profile(0, &[Topic::Pol], 0.5, 0.9), profile(1, &[Topic::Pol], 0.5, 0.3)];
        let mut ledger = TrustLedger::new(false);
        let up = ledger.update_negative(&profiles, 0, 1, &[(1.0, 0.4)]);
        assert_eq!(up.raw, up.stored);
        assert!(ledger.global(0, 1).unwrap() < 0.0);
    }

    #[test]
    fn credibility_score_examples() {
        assert!((weighted_credibility(&[(0.2, 1.0), (0.6, 0.5)]).unwrap() - 0.625).abs() < 1e-12);
        assert_eq!(
            weighted_credibility(&[(0.3, 0.8), (0.9, 0.8), (0.1, 0.8)]).unwrap(),
            0.8
        );
        assert_eq!(weighted_credibility(&[(0.7, 0.33)]).unwrap(), 0.33);
        assert_eq!(weighted_credibility(&[]), Err(TrustError::NoValidators));
        assert_eq!(weighted_credibility(&[(0.0, 0.4)]), Err(TrustError::ZeroTrustMass));
    }

    #[test]
    fn credibility_score_uses_ledger_weights() {
        // star around 0; sender 0 trusts validators through global records
        let g = SocialGraph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let profiles = vec![
            profile(0, &[Topic::Tech], 0.5, 0.5),
            profile(1, &[Topic::Tech], 1.0, 0.5),
            profile(2, &[Topic::Tech], 0.5, 0.5),
        ];
        let mut ledger = TrustLedger::default();
        ledger.set_global(0, 1, 0.2);
        ledger.set_global(0, 2, 0.6);
        let s = credibility_score(&g, &profiles, &mut ledger, 0, &[1, 2], Topic::Tech).unwrap();
        assert!((s - 0.625).abs() < 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let g = SocialGraph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut profiles = vec![
            profile(0, &[Topic::Pol], 0.0, 0.5),
            profile(1, &[Topic::Pol], 0.2, 0.5),
            profile(2, &[Topic::Pol], 0.4, 0.5),
            profile(3, &[Topic::Pol], 0.9, 0.5),
        ];
        assert!((validation_threshold(&g, &profiles, 0, Topic::Pol).unwrap() - 0.5).abs() < 1e-12);
        profiles[1].interests = [Topic::Movie].into_iter().collect();
        profiles[2].interests = [Topic::Movie].into_iter().collect();
        assert_eq!(validation_threshold(&g, &profiles, 0, Topic::Pol).unwrap(), 0.9);
        // nobody interested: fall back to all neighbors
        assert!((validation_threshold(&g, &profiles, 0, Topic::Tech).unwrap() - 0.5).abs() < 1e-12);
        let g = SocialGraph::from_edges(5, [(0, 1), (0, 2), (0, 3)]).unwrap();
        profiles.push(profile(4, &[Topic::Pol], 0.1, 0.5));
        assert_eq!(
            validation_threshold(&g, &profiles, 4, Topic::Pol),
            Err(TrustError::IsolatedNode(4))
        );
    }

    #[test]
    fn threshold_on_mixed_star_matches_enumeration() {
        let g = SocialGraph::from_edges(6, (1..6).map(|k| (0, k))).unwrap();
        let topics = [
            [Topic::Pol, Topic::Tech],
            [Topic::Tech, Topic::Pol],
            [Topic::Movie, Topic::Movie],
            [Topic::Pol, Topic::Research],
            [Topic::Research, Topic::Research],
        ];
        let creds = [0.15, 0.35, 0.55, 0.75, 0.95];
        let mut profiles = vec![profile(0, &[Topic::Pol], 0.5, 0.5)];
        for k in 0..5 {
            profiles.push(profile(k + 1, &topics[k], creds[k], 0.5));
        }
        for t in Topic::ALL {
            let mut sum = 0.0;
            let mut n = 0;
            for p in &profiles[1..6] {
                if p.interests.contains(t) {
                    sum += p.credibility.get(t);
                    n += 1;
                }
            }
            let expected = sum / n as f64;
            assert!(
                (validation_threshold(&g, &profiles, 0, t).unwrap() - expected).abs() < 1e-12,
                "{t}"
            );
        }
    }

    #[test]
    fn decide_is_strict() {
        assert_eq!(decide(0.7, 0.5), Decision::Validated);
        assert_eq!(decide(0.5, 0.5), Decision::Blocked);
        assert_eq!(decide(0.0, 0.0), Decision::Blocked);
    }

    #[test]
    fn block_weight_examples() {
        assert_eq!(block_info_weight(&[]), 0.0);
        assert!((block_info_weight(&[(0.5, 0.4)]) - 0.2).abs() < 1e-15);
        let entries = [(0.5, 0.4), (0.25, 0.8), (1.0, 0.1)];
        let mut oracle = 0.0;
        for (v, c) in entries {
            oracle += v * c;
        }
        assert!((block_info_weight(&entries) - oracle).abs() < 1e-15);
        assert!((oracle - 0.5).abs() < 1e-15);
    }

    fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..12)
    }

    proptest! {
        #[test]
        fn updates_reflect_about_base(base in 0.0f64..1.0, ps in pairs()) {
            let pos = raw_trust_update(base, &ps, Polarity::Positive);
            let neg = raw_trust_update(base, &ps, Polarity::Negative);
            prop_assert_eq!(trust_increment(&ps, Polarity::Positive), -trust_increment(&ps, Polarity::Negative));
            prop_assert!(((pos - base) + (neg - base)).abs() <= 4.0 * f64::EPSILON);
            prop_assert!((pos - eq_oracle(base, &ps, 1.0)).abs() < 1e-12);
            prop_assert!((neg - eq_oracle(base, &ps, -1.0)).abs() < 1e-12);
        }

        #[test]
        fn verdicts_move_trust_monotonically(base in 0.0f64..1.0, ps in pairs(), positive: bool) {
            let profiles = vec![profile(0, &[Topic::Pol], 0.5, 0.5), profile(1, &[Topic::Pol], 0.5, base)];
            let mut ledger = TrustLedger::default();
            ledger.set_global(0, 1, base);
            let up = if positive {
                ledger.update_positive(&profiles, 0, 1, &ps)
            } else {
                ledger.update_negative(&profiles, 0, 1, &ps)
            };
            if positive { prop_assert!(up.stored >= base) } else { prop_assert!(up.stored <= base) }
            prop_assert!((0.0..=1.0).contains(&up.stored));
        }

        #[test]
        fn weighted_credibility_bounded_and_scale_free(
            entries in proptest::collection::vec((0.001f64..1.0, 0.0f64..1.0), 1..20),
            scale in 0.001f64..1000.0,
        ) {
            let s = weighted_credibility(&entries).unwrap();
            let lo = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
            let hi = entries.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= s && s <= hi);
            let scaled: Vec<_> = entries.iter().map(|&(w, c)| (w * scale, c)).collect();
            prop_assert!((weighted_credibility(&scaled).unwrap() - s).abs() <= 1e-12);
        }

        #[test]
        fn decide_is_pure(score in 0.0f64..1.0, thr in 0.0f64..1.0) {
            prop_assert_eq!(decide(score, thr), decide(score, thr));
            prop_assert_eq!(decide(score, thr) == Decision::Validated, score > thr);
        }
    }
}
