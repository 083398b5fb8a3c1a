//! Splittable deterministic randomness.
//!
//! A [`SeedStream`] is a pure value: deriving a child stream never mutates the
//! parent, so the generator handed to a job depends only on the derivation path
//! and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic randomness source keyed by a master seed and a derivation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a; stable across platforms and compiler versions.
pub fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SeedStream {
    pub fn new(master_seed: u64) -> Self {
        SeedStream {
            key: splitmix64(master_seed),
        }
    }

    /// Stream for `(master_seed, run_index)`.
    pub fn for_run(master_seed: u64, run_index: u64) -> Self {
        Self::new(master_seed).derive(run_index)
    }

    pub fn derive(&self, index: u64) -> Self {
        SeedStream {
            key: splitmix64(self.key ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn derive_str(&self, label: &str) -> Self {
        self.derive(stable_hash(label))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
