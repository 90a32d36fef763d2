//! Seed expansion. A global 64-bit seed selects a ChaCha8 key; replica `k` uses stream
//! `k` of that key, so replicas are independent and individually reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, replica: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Derives a sub-seed for a named phase of an experiment (sampling, dynamics, ...) so
/// phases never share a stream.
pub fn phase_seed(seed: u64, phase: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ phase.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
