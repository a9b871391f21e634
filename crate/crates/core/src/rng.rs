//! Counter-addressable random stream.
//!
//! Draw `i` of a stream depends only on `(seed, i)`, so any partition of
//! the index range into chunks reproduces the same values.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// 32-bit words consumed per draw (two `u64`s).
const WORDS_PER_DRAW: u128 = 4;

pub struct CounterStream {
    rng: ChaCha8Rng,
}

impl CounterStream {
    /// Stream positioned at draw `index`.
    pub fn at(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(WORDS_PER_DRAW * index as u128);
        Self { rng }
    }

    /// Next pair of uniforms in `[0, 1)`.
    pub fn next_pair(&mut self) -> (f64, f64) {
        (unit(self.rng.next_u64()), unit(self.rng.next_u64()))
    }
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
