//! Deterministic seed derivation.
//!
//! Every random stream in this crate is keyed by an explicit user seed plus a
//! structural path (sample index, trial index, pair indices, ...). Derivation
//! must be stable across platforms and releases, so we use a fixed splitmix64
//! chain rather than the standard library hasher.

/// One splitmix64 step.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a structural path.
///
/// The same `(base, parts)` always yields the same child, and distinct paths
/// yield independent-looking streams.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x5851_f42d_4c95_7f2d);
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}
