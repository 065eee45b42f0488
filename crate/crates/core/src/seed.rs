//! Deterministic seed derivation for replica sweeps and batteries.
//!
//! Replicas and battery cases get their own streams derived from one
//! base seed, so concurrent execution order never changes results.

/// SplitMix64 step; a full-period mixer with good avalanche behavior.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a list of stream tags
/// (e.g. `[subsystem, epsilon index, replica index]`).
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut state = base ^ 0x6a09e667f3bcc909;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        // run each tag through its own mixer before folding it in
        let mut ts = t.wrapping_add(0x9e3779b97f4a7c15);
        state ^= splitmix64(&mut ts);
        out = splitmix64(&mut state);
    }
    out
}
