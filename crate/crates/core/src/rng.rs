//! Seeded random streams.
//!
//! Every random quantity in the laboratory is drawn from an [`RngStream`], a
//! xoshiro256++ generator. Streams for independent work items are derived
//! from a master seed and an index by [`derive_stream`], so a trial's draws
//! depend only on `(master_seed, index)` and never on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for work item `index` under `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Single-owner random stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Uniform draw from `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..bound`. `bound` must be nonzero.
    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    pub fn coin(&mut self) -> bool {
        self.inner.next_u64() >> 63 == 1
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Stream for work item `index` of an experiment seeded with `master_seed`.
pub fn derive_stream(master_seed: u64, index: u64) -> RngStream {
    RngStream::new(derive_seed(master_seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_index_reproduce() {
        let mut a = derive_stream(42, 7);
        let mut b = derive_stream(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn state_after_k_draws_is_pure() {
        let mut a = derive_stream(3, 1);
        for _ in 0..57 {
            a.next_u64();
        }
        let mut b = derive_stream(3, 1);
        for _ in 0..57 {
            b.next_u64();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn neighbouring_trials_differ() {
        let collisions = (0..1000u64)
            .filter(|&s| derive_stream(s, 1).next_u64() == derive_stream(s, 2).next_u64())
            .count();
        assert_eq!(collisions, 0);
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 10_000;
        for (i, j) in [(0u64, 1u64), (1, 2), (5, 1000)] {
            let mut a = derive_stream(99, i);
            let mut b = derive_stream(99, j);
            let xs: Vec<f64> = (0..n).map(|_| a.uniform() - 0.5).collect();
            let ys: Vec<f64> = (0..n).map(|_| b.uniform() - 0.5).collect();
            let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            let corr = cov / (1.0 / 12.0);
            assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr} for ({i},{j})");
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = RngStream::new(0);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
