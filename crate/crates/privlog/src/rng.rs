//! Deterministic random-stream derivation.
//!
//! All randomness in a pipeline run flows from one master seed. Every
//! consumer (a prefix-tree node, a sequence being enriched, a trace being
//! anonymized) gets its own stream derived from `(seed, domain, index)`,
//! so results do not depend on evaluation order and two runs with the
//! same seed are byte-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream domains, one per randomized pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    /// Per-node noise in the trace-variant query.
    QueryNode,
    /// The single shuffle that flattens the variant bag.
    Flatten,
    /// Per-sequence enrichment randomness.
    Enrich,
    /// Per-trace local-DP randomness.
    Anonymize,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::QueryNode => 0x01,
            StreamDomain::Flatten => 0x02,
            StreamDomain::Enrich => 0x03,
            StreamDomain::Anonymize => 0x04,
        }
    }
}

/// FNV-1a over a byte slice. Used to fold variable-length identifiers
/// (prefix-tree paths) into a stream index. Fixed algorithm, so derived
/// streams are stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive the RNG stream for `(seed, domain, index)`.
pub fn derive_rng(seed: u64, domain: StreamDomain, index: u64) -> ChaCha12Rng {
    // injective in index for a fixed (seed, domain); splitmix rounds below
    // do the actual mixing
    let mut state = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(domain.tag())
        .rotate_left(23)
        .wrapping_add(index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Draw from Laplace(0, `scale`) by inverse-CDF sampling.
///
/// `scale` must be nonnegative; a zero scale returns 0 exactly.
pub fn laplace_noise<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    debug_assert!(scale >= 0.0 && scale.is_finite());
    let u: f64 = rng.random::<f64>() - 0.5; // uniform on [-0.5, 0.5)
    let t = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    -scale * u.signum() * t.ln()
}
