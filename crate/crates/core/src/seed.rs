//! Derived random streams. A run is fully determined by its master seed: each
//! (agent, step, purpose) triple gets its own ChaCha stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags mixed into derived seeds.
pub mod purpose {
    pub const GRADIENT: u64 = 1;
    pub const ROUNDING: u64 = 2;
    pub const ESTIMATE: u64 = 3;
    pub const SCENARIO: u64 = 4;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, agent: u64, step: u64, purpose: u64) -> u64 {
    [agent, step, purpose]
        .into_iter()
        .fold(splitmix64(master), |h, v| splitmix64(h ^ splitmix64(v)))
}

pub fn stream(master: u64, agent: usize, step: usize, purpose: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, agent as u64, step as u64, purpose))
}
