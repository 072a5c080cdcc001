//! Seeded random streams.
//!
//! Every random decision in the pipeline draws from a [`SeededRng`] derived
//! from `(master_seed, index, stream label)` through SHA-256, so any single
//! sample or question can be regenerated without replaying the others.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream for `(master, index, stream)`.
    pub fn derive(master: u64, index: u64, stream: &str) -> Self {
        SeededRng(ChaCha8Rng::from_seed(derive_seed(master, index, stream)))
    }
}

pub fn derive_seed(master: u64, index: u64, stream: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update(stream.as_bytes());
    hasher.finalize().into()
}

/// 64-bit seed for `(master, index, stream)`, for consumers that take a `u64`.
pub fn derive_u64(master: u64, index: u64, stream: &str) -> u64 {
    let seed = derive_seed(master, index, stream);
    u64::from_le_bytes(seed[..8].try_into().expect("8 bytes"))
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: Vec<u32> = (0..4).map(|_| SeededRng::derive(42, 7, "x").random()).collect();
        let mut r1 = SeededRng::derive(42, 7, "x");
        let mut r2 = SeededRng::derive(42, 7, "x");
        let mut r3 = SeededRng::derive(42, 8, "x");
        let mut r4 = SeededRng::derive(42, 7, "y");
        let v1: u64 = r1.random();
        assert_eq!(v1, r2.random::<u64>());
        assert_ne!(v1, r3.random::<u64>());
        assert_ne!(v1, r4.random::<u64>());
        assert!(a.iter().all(|v| *v == a[0]));
    }
}
