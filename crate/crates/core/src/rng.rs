//! Named random sub-streams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Profiles = 1,
    Messages = 2,
    TieBreak = 3,
}

/// Same root seed and stream always give the same sequence; different
/// streams never overlap.
pub fn stream(root_seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(which as u64);
    rng
}
