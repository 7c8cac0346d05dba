//! Deterministic seed derivation.
//!
//! Every randomized component draws from a ChaCha stream whose seed is
//! derived from a root seed plus a label path (tree index, elimination
//! round, sector name, model kind, ...). Derivation is pure integer mixing,
//! so results are identical across platforms and independent of execution
//! order under parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// A seed plus the label path that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn root(seed: u64) -> Self {
        Self(splitmix64(seed))
    }

    /// Child stream for an integer label (tree index, round, ...).
    pub fn child(&self, label: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0x9e37))))
    }

    /// Child stream for a string label (sector name, model kind, ...).
    pub fn child_str(&self, label: &str) -> Self {
        let mut h = FNV_OFFSET;
        for b in label.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        Self(splitmix64(self.0 ^ h))
    }

    pub fn value(&self) -> u64 {
        self.0
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
