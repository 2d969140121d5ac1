//! Counter-based seed derivation.
//!
//! A master seed selects a ChaCha8 key via `seed_from_u64`; block `i` of any
//! batched computation draws from stream `i` of that key. Streams are
//! independent, so splitting work across threads by block index never
//! changes results. Distinct purposes inside one run use distinct `domain`
//! values, which are mixed into the key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Returns the RNG for `(master, domain, block)`.
pub fn block_rng(master: u64, domain: u64, block: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(mix(master, domain));
    rng.set_stream(block);
    rng
}

/// Convenience for single-stream use.
pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

// splitmix64 finalizer over (master, domain).
fn mix(master: u64, domain: u64) -> u64 {
    let mut z = master ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
