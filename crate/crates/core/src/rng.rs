//! Seeded random streams.
//!
//! Every optimizer run draws from a ChaCha8 generator keyed by the master
//! seed. Population members get their own ChaCha stream id built from
//! `(generation, candidate_index)`, so results do not depend on the order or
//! thread on which candidates are advanced.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for a standalone run keyed by `seed` (stream 0).
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for `candidate` during `generation`.
///
/// `candidate_stream(seed, 0, 0)` is the same sequence as [`seeded`]`(seed)`.
pub fn candidate_stream(master_seed: u64, candidate: usize, generation: u64) -> StreamRng {
    let candidate = u32::try_from(candidate).expect("candidate index exceeds u32");
    let generation = u32::try_from(generation).expect("generation exceeds u32");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((u64::from(generation) << 32) | u64::from(candidate));
    rng
}
