//! Seed derivation.
//!
//! Every replication gets a 64-bit seed obtained by chaining SplitMix64 over
//! `(base_seed, sweep_index, replication_index)`. That seed keys a ChaCha20
//! generator, and independent purposes (design, noise, …) use distinct
//! ChaCha stream ids, so no two draws share a keystream and results do not
//! depend on the order replications are executed in.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// ChaCha stream ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Design = 1,
    Noise = 2,
    Permutation = 3,
    GenotypeRetry = 4,
}

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at sweep point `sweep`.
pub fn child_seed(base_seed: u64, sweep: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ sweep) ^ rep)
}

/// Generator for one purpose of one replication.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
