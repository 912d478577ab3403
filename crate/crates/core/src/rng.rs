//! Seed derivation for reproducible parallel runs.
//!
//! Every random stream in the crate is derived from a single user-facing
//! 64-bit seed plus a stream tag and two counters, so per-tree and
//! per-replicate work can be scheduled in any order without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed`, a stream tag, and two counters into one 64-bit sub-seed.
///
/// Distinct `(tag, a, b)` triples yield streams that are independent for all
/// practical purposes; the order of tag bytes matters.
pub fn derive_seed(seed: u64, tag: &str, a: u64, b: u64) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for chunk in tag.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state = state.wrapping_add(u64::from_le_bytes(word)) ^ acc;
        acc = splitmix64(&mut state);
    }
    state = state.wrapping_add(a) ^ acc;
    acc = splitmix64(&mut state);
    state = state.wrapping_add(b) ^ acc;
    splitmix64(&mut state)
}

/// ChaCha8 generator seeded from the derived sub-seed.
pub fn stream_rng(seed: u64, tag: &str, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, a, b))
}
