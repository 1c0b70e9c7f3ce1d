//! Counter-based seed derivation.
//!
//! A scenario carries one `u64` seed. Every consumer of randomness gets its
//! own ChaCha8 stream addressed by `(seed, stream, index)`: the seed keys the
//! cipher, `stream` selects the ChaCha stream id and `index` the block
//! position inside it. Nothing depends on evaluation order or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids. Distinct consumers never share a stream.
pub mod streams {
    pub const THEOREM_T1: u64 = 1;
    pub const THEOREM_T2: u64 = 2;
    pub const THEOREM_T3: u64 = 3;
    pub const THEOREM_T4: u64 = 4;
    pub const CHAIN_RUNS: u64 = 16;
    pub const SWEEP_CELLS: u64 = 17;
    pub const CASCADE_FIXTURES: u64 = 32;
    pub const CONTRACT_SEQUENCES: u64 = 33;
}

/// Derives the `index`-th child seed of `seed` on `stream`.
pub fn derive(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // Each ChaCha block holds 16 words; one block per index.
    rng.set_word_pos(u128::from(index) * 16);
    rng.next_u64()
}

/// An independent generator for work item `index` on `stream`.
pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream, index))
}
