//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by a tuple of counters
//! (stream tag, frame, transmission, ...) mixed into the master seed, so
//! workers never share a generator and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the harness.
pub mod stream {
    pub const CHANNEL: u64 = 1;
    pub const BITS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SNN: u64 = 4;
    pub const LANDSCAPE: u64 = 5;
}

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a list of counters into `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(master, path))
}
