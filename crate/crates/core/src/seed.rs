//! Deterministic seed substreams.
//!
//! Every source of randomness in a run is derived from one root seed and a
//! short label, so components (simulation, policy search, training, splits)
//! can be reseeded independently without correlating their streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a stream label.
pub fn substream(root: u64, label: &str) -> u64 {
    let mut state = splitmix64(root ^ 0x6c62_272e_07bb_0142);
    for &b in label.as_bytes() {
        state = splitmix64(state ^ u64::from(b));
    }
    state
}

/// ChaCha8 generator for a labelled substream. ChaCha8 has a stable,
/// portable output stream, which keeps artifacts byte-identical across
/// platforms and releases.
pub fn rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream(root, label))
}
