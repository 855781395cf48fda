//! Deterministic seed derivation for independent pipeline stages.
//!
//! Every randomized stage (splits, weight initialization, synthetic trial
//! generation, batch order) seeds its own ChaCha20 stream from the master
//! seed and a stage tag, so runs reproduce bit-for-bit regardless of
//! scheduling and no stage perturbs another's stream.

/// Derives a stage seed from the master seed and a tag string.
///
/// FNV-1a over the tag, mixed with the master seed through a splitmix64
/// finalizer. Stable across platforms and releases by construction.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in tag.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ hash)
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
