//! Hash-chained propagation records.
//!
//! Every message-generating node owns one [`Chain`]. Blocks carry ordered
//! [`MessageDigest`]s; each block hash covers
//! `index ‖ prev_hash ‖ timestamp ‖ digests ‖ info_weight` in the canonical
//! encoding below, so any edit to a stored block breaks either its own hash or
//! the link from its successor.
//!
//! Canonical encoding: integers as 8-byte big-endian, reals as IEEE-754
//! binary64 big-endian, enums as 1-byte ordinals, per-topic maps as a count
//! followed by `(ordinal, value)` in ascending ordinal order, lists
//! length-prefixed with an 8-byte count, hashes as their 32 raw bytes.
//!
//! The export format is one JSON object per line:
//! `{"origin":<node>,"block":{...}}`. Hashes are lowercase hex and every real
//! is the lowercase hex of its bit pattern, so text and value correspond
//! one-to-one.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::NodeId;
use crate::trust::{Decision, PerTopic, Topic};

pub const HASH_LEN: usize = 32;

/// Default chain capacity per message-generating node.
pub const DEFAULT_MAX_LEN: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("chain is full ({0} blocks)")]
    ChainFull(usize),
    #[error("chain linkage is broken at block {0}")]
    InvalidChain(usize),
    #[error("chain capacity must be positive")]
    ZeroCapacity,
    #[error("message {0} not found in chain")]
    MessageNotFound(u64),
    #[error("provenance hash mismatch in block {block}")]
    TamperedProvenance { block: usize },
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record on line {line}: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash256(pub [u8; HASH_LEN]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0; HASH_LEN]);

    pub fn of(bytes: &[u8]) -> Self {
        Hash256(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(2 * HASH_LEN);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Accepts exactly 64 lowercase hex digits.
    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = strict_hex(s)?;
        Some(Hash256(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", self.to_hex())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn strict_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    let nibble = |c: u8| match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None,
    };
    s.as_bytes()
        .chunks(2)
        .map(|pair| Some(nibble(pair[0])? << 4 | nibble(pair[1])?))
        .collect()
}

impl Serialize for Hash256 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Hash256::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 lowercase hex digits"))
    }
}

/// Reals travel as the lowercase hex of their IEEE-754 bits.
mod hex_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:016x}", v.to_bits()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = super::strict_hex(&s)
            .filter(|b| b.len() == 8)
            .ok_or_else(|| serde::de::Error::custom("expected 16 lowercase hex digits"))?;
        Ok(f64::from_bits(u64::from_be_bytes(bytes.try_into().expect("8 bytes"))))
    }
}

mod hex_per_topic {
    use super::PerTopic;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &PerTopic<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for x in v.0 {
            seq.serialize_element(&format!("{:016x}", x.to_bits()))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PerTopic<f64>, D::Error> {
        let raw = <[String; 4]>::deserialize(d)?;
        let mut out = [0.0; 4];
        for (slot, s) in out.iter_mut().zip(raw.iter()) {
            let bytes = super::strict_hex(s)
                .filter(|b| b.len() == 8)
                .ok_or_else(|| serde::de::Error::custom("expected 16 lowercase hex digits"))?;
            *slot = f64::from_bits(u64::from_be_bytes(bytes.try_into().expect("8 bytes")));
        }
        Ok(PerTopic(out))
    }
}

#[derive(Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_bits().to_be_bytes());
        self
    }

    pub fn ordinal(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn hash(&mut self, h: &Hash256) -> &mut Self {
        self.buf.extend_from_slice(&h.0);
        self
    }

    pub fn per_topic(&mut self, m: &PerTopic<f64>) -> &mut Self {
        self.u64(4);
        for t in Topic::ALL {
            self.ordinal(t.ordinal()).f64(m.get(t));
        }
        self
    }

    pub fn list<T: CanonicalEncode>(&mut self, items: &[T]) -> &mut Self {
        self.u64(items.len() as u64);
        for item in items {
            item.encode(self);
        }
        self
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub trait CanonicalEncode {
    fn encode(&self, enc: &mut Encoder);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::default();
        self.encode(&mut enc);
        enc.into_bytes()
    }

    fn content_hash(&self) -> Hash256 {
        Hash256::of(&self.canonical_bytes())
    }
}

/// Identity record a node broadcasts with its information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeProperty {
    pub node_id: NodeId,
    #[serde(with = "hex_per_topic")]
    pub credibility: PerTopic<f64>,
    pub info_type: Topic,
}

impl CanonicalEncode for NodeProperty {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.node_id as u64)
            .per_topic(&self.credibility)
            .ordinal(self.info_type.ordinal());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageRef {
    pub message_id: u64,
    pub topic: Topic,
    pub origin: NodeId,
}

impl CanonicalEncode for MessageRef {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.message_id)
            .ordinal(self.topic.ordinal())
            .u64(self.origin as u64);
    }
}

/// A message on offer together with its local trust context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeService {
    pub message: MessageRef,
    #[serde(with = "hex_f64")]
    pub local_trust: f64,
}

impl CanonicalEncode for NodeService {
    fn encode(&self, enc: &mut Encoder) {
        self.message.encode(enc);
        enc.f64(self.local_trust);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum DigestBody {
    /// Injection of a message by its generator.
    Simd { np: NodeProperty, ns: NodeService },
    /// Miner attestation that the referenced block belongs in the chain.
    Miner { block_ref: Hash256 },
    /// A hop verdict.
    Verification {
        message_id: u64,
        verifier: NodeId,
        decision: Decision,
        #[serde(with = "hex_f64")]
        score: f64,
    },
    /// Misinformation notice carrying the origin's replacement credibility.
    Blocking {
        message_id: u64,
        origin: NodeId,
        #[serde(with = "hex_per_topic")]
        new_credibility: PerTopic<f64>,
    },
}

impl DigestBody {
    pub fn ordinal(&self) -> u8 {
        match self {
            DigestBody::Simd { .. } => 0,
            DigestBody::Miner { .. } => 1,
            DigestBody::Verification { .. } => 2,
            DigestBody::Blocking { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageDigest {
    pub body: DigestBody,
    /// Hash of the generator's [`NodeProperty`].
    pub generator_np_hash: Hash256,
}

impl MessageDigest {
    pub fn new(body: DigestBody, generator: &NodeProperty) -> Self {
        MessageDigest {
            body,
            generator_np_hash: generator.content_hash(),
        }
    }

    pub fn simd(np: NodeProperty, ns: NodeService) -> Self {
        let generator_np_hash = np.content_hash();
        MessageDigest {
            body: DigestBody::Simd { np, ns },
            generator_np_hash,
        }
    }
}

impl CanonicalEncode for MessageDigest {
    fn encode(&self, enc: &mut Encoder) {
        enc.ordinal(self.body.ordinal());
        match &self.body {
            DigestBody::Simd { np, ns } => {
                np.encode(enc);
                ns.encode(enc);
            }
            DigestBody::Miner { block_ref } => {
                enc.hash(block_ref);
            }
            DigestBody::Verification {
                message_id,
                verifier,
                decision,
                score,
            } => {
                enc.u64(*message_id)
                    .u64(*verifier as u64)
                    .ordinal(decision.ordinal())
                    .f64(*score);
            }
            DigestBody::Blocking {
                message_id,
                origin,
                new_credibility,
            } => {
                enc.u64(*message_id).u64(*origin as u64).per_topic(new_credibility);
            }
        }
        enc.hash(&self.generator_np_hash);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Hash256,
    pub timestamp: u64,
    pub digests: Vec<MessageDigest>,
    #[serde(with = "hex_f64")]
    pub info_weight: f64,
    pub block_hash: Hash256,
}

impl Block {
    /// Builds a block and seals it with its content hash.
    pub fn sealed(
        index: u64,
        prev_hash: Hash256,
        timestamp: u64,
        digests: Vec<MessageDigest>,
        info_weight: f64,
    ) -> Self {
        let mut block = Block {
            index,
            prev_hash,
            timestamp,
            digests,
            info_weight,
            block_hash: Hash256::ZERO,
        };
        block.block_hash = block.compute_hash();
        block
    }

    /// Hash of everything except `block_hash` itself.
    pub fn compute_hash(&self) -> Hash256 {
        self.content_hash()
    }
}

impl CanonicalEncode for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.index)
            .hash(&self.prev_hash)
            .u64(self.timestamp)
            .list(&self.digests)
            .f64(self.info_weight);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainValidity {
    Valid,
    InvalidAt(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    blocks: Vec<Block>,
    max_len: usize,
}

impl Chain {
    /// Starts a chain whose block 0 links to the all-zero hash.
    pub fn with_genesis(
        max_len: usize,
        digests: Vec<MessageDigest>,
        timestamp: u64,
        info_weight: f64,
    ) -> Result<Self, ChainError> {
        if max_len == 0 {
            return Err(ChainError::ZeroCapacity);
        }
        Ok(Chain {
            blocks: vec![Block::sealed(0, Hash256::ZERO, timestamp, digests, info_weight)],
            max_len,
        })
    }

    /// Wraps already-built blocks without checking them; see [`verify_chain`].
    pub fn from_blocks(blocks: Vec<Block>, max_len: usize) -> Self {
        Chain { blocks, max_len }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mutable access for tooling and tamper tests; edits are caught by [`verify_chain`].
    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn tip_hash(&self) -> Hash256 {
        self.blocks.last().map(|b| b.block_hash).unwrap_or(Hash256::ZERO)
    }

    pub fn append_block(
        &mut self,
        digests: Vec<MessageDigest>,
        timestamp: u64,
        info_weight: f64,
    ) -> Result<&Block, ChainError> {
        if self.blocks.len() >= self.max_len {
            return Err(ChainError::ChainFull(self.max_len));
        }
        if let ChainValidity::InvalidAt(at) = verify_chain(self) {
            return Err(ChainError::InvalidChain(at));
        }
        let block = Block::sealed(
            self.blocks.len() as u64,
            self.tip_hash(),
            timestamp,
            digests,
            info_weight,
        );
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }
}

/// Recomputes every hash and link; reports the first offending block.
pub fn verify_chain(chain: &Chain) -> ChainValidity {
    let mut prev = Hash256::ZERO;
    for (k, block) in chain.blocks.iter().enumerate() {
        if k >= chain.max_len
            || block.index != k as u64
            || block.prev_hash != prev
            || block.compute_hash() != block.block_hash
        {
            return ChainValidity::InvalidAt(k);
        }
        prev = block.block_hash;
    }
    ChainValidity::Valid
}

/// Origin of `message_id` from the earliest SIMD that carries it.
pub fn trace_source(chain: &Chain, message_id: u64) -> Result<NodeId, ChainError> {
    for (k, block) in chain.blocks.iter().enumerate() {
        for digest in &block.digests {
            if let DigestBody::Simd { np, ns } = &digest.body {
                if ns.message.message_id != message_id {
                    continue;
                }
                if np.content_hash() != digest.generator_np_hash {
                    return Err(ChainError::TamperedProvenance { block: k });
                }
                return Ok(np.node_id);
            }
        }
    }
    Err(ChainError::MessageNotFound(message_id))
}

/// Every digest must name a generator whose SIMD appears in this chain, and
/// every SIMD's hash must match its embedded node property.
pub fn verify_provenance(chain: &Chain) -> Result<(), ChainError> {
    let mut known = Vec::new();
    for (k, block) in chain.blocks.iter().enumerate() {
        for digest in &block.digests {
            if let DigestBody::Simd { np, .. } = &digest.body {
                if np.content_hash() != digest.generator_np_hash {
                    return Err(ChainError::TamperedProvenance { block: k });
                }
                known.push(digest.generator_np_hash);
            } else if !known.contains(&digest.generator_np_hash) {
                return Err(ChainError::TamperedProvenance { block: k });
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportRecord<B> {
    origin: NodeId,
    block: B,
}

/// Writes chains as NDJSON, ascending by origin, blocks in chain order.
pub fn export_chains<W: Write>(chains: &BTreeMap<NodeId, Chain>, mut out: W) -> std::io::Result<()> {
    for (&origin, chain) in chains {
        for block in chain.blocks() {
            let record = ExportRecord { origin, block };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads an export back into per-origin chains with capacity `max_len`.
/// Parsing is strict; any unknown field or non-canonical value is an error.
pub fn import_chains<R: BufRead>(input: R, max_len: usize) -> Result<BTreeMap<NodeId, Chain>, ExportError> {
    let mut chains: BTreeMap<NodeId, Vec<Block>> = BTreeMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record: ExportRecord<Block> =
            serde_json::from_str(&line).map_err(|source| ExportError::Malformed { line: idx + 1, source })?;
        chains.entry(record.origin).or_default().push(record.block);
    }
    Ok(chains
        .into_iter()
        .map(|(origin, blocks)| (origin, Chain::from_blocks(blocks, max_len)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExportProblem {
    Invalid {
        origin: NodeId,
        at: usize,
    },
    Provenance {
        origin: NodeId,
        block: usize,
    },
    /// The record's origin disagrees with the generator of the chain's first SIMD.
    OwnerMismatch {
        origin: NodeId,
    },
}

impl fmt::Display for ExportProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExportProblem::Invalid { origin, at } => write!(f, "chain of node {origin}: invalid at block {at}"),
            ExportProblem::Provenance { origin, block } => {
                write!(f, "chain of node {origin}: provenance mismatch in block {block}")
            }
            ExportProblem::OwnerMismatch { origin } => {
                write!(f, "chain of node {origin}: owner does not match generator")
            }
        }
    }
}

/// Full check of imported chains: hashes, links, provenance and ownership.
pub fn audit_chains(chains: &BTreeMap<NodeId, Chain>) -> Vec<ExportProblem> {
    let mut problems = Vec::new();
    for (&origin, chain) in chains {
        if let ChainValidity::InvalidAt(at) = verify_chain(chain) {
            problems.push(ExportProblem::Invalid { origin, at });
            continue;
        }
        if let Err(ChainError::TamperedProvenance { block }) = verify_provenance(chain) {
            problems.push(ExportProblem::Provenance { origin, block });
            continue;
        }
        let owner = chain.blocks().first().and_then(|b| {
            b.digests.iter().find_map(|d| match &d.body {
                DigestBody::Simd { np, .. } => Some(np.node_id),
                _ => None,
            })
        });
        if owner != Some(origin) {
            problems.push(ExportProblem::OwnerMismatch { origin });
        }
    }
    problems
}
