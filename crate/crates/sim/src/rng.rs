//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream of the cell's root seed,
//! so the order in which episodes or candidates run never changes a result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids.
pub const RESET: u64 = 1;
pub const POLICY: u64 = 2;
pub const CEM_SAMPLING: u64 = 3;
pub const CEM_EPISODES: u64 = 4;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The `index`-th 64-bit word of a stream, without drawing the ones before it.
pub fn derive_seed(seed: u64, id: u64, index: u64) -> u64 {
    let mut rng = stream(seed, id);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}
