//! Named random streams derived from a single experiment seed.
//!
//! Each consumer of randomness draws from its own ChaCha stream, so adding a
//! new consumer never shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split = 1,
    Folds = 2,
    Baseline = 3,
    Synthetic = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
