//! Deterministic random number streams.
//!
//! A run is driven by one master seed split into independent named streams
//! (generation, workload, protocol, policy, ...) so that changing a knob
//! that consumes one stream does not perturb draws from the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type DetRng = ChaCha8Rng;

/// SplitMix64 finalizer; mixes two words into one well-distributed word.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A named stream derived from the master seed.
pub fn stream(master: u64, name: &str) -> DetRng {
    seeded(mix(master, fnv1a(name)))
}

/// A generator seeded from a single word, expanded by SplitMix64.
pub fn seeded(word: u64) -> DetRng {
    let mut seed = [0u8; 32];
    let mut x = word;
    for chunk in seed.chunks_mut(8) {
        x = mix(x, 0xa076_1d64_78bd_642f);
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    DetRng::from_seed(seed)
}

/// The seed word a named stream would draw first; used when a sub-seed
/// (rather than a live generator) must be handed to a component.
pub fn stream_word(master: u64, name: &str) -> u64 {
    mix(master, fnv1a(name))
}
