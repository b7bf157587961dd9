//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 seeded with the 64-bit run seed
//! (`seed_from_u64`), switched to a numbered stream (`set_stream`) so that
//! independent consumers (noise for snapshot 17, weight init, dataset item 3)
//! never share or shift each other's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids reserved for the different consumers of a run seed.
pub mod streams {
    pub const WEIGHTS: u64 = 1;
    pub const BENCHMARK_NOISE: u64 = 2;
    pub const DATASET: u64 = 1 << 20;
    pub const DEGRADATION: u64 = 2 << 20;
    pub const MONITOR: u64 = 3 << 20;
}

/// Generator for stream `stream` of run seed `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
