//! Portable random stream for the environment.
//!
//! The generator is xoshiro256** seeded through SplitMix64 (the
//! `seed_from_u64` construction of `rand_xoshiro`). Derived draws are
//! defined here rather than delegated to a distribution crate so that any
//! implementation can reproduce trajectories bit for bit:
//!
//! * `uniform()`   = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! * `normal()`    = Box-Muller cosine branch,
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` with `u1, u2` two consecutive
//!   `uniform()` draws. The sine branch is discarded.
//! * `index(k)`    = `next_u64() % k`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    inner: Xoshiro256StarStar,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn index(&mut self, k: usize) -> usize {
        debug_assert!(k > 0);
        (self.next_u64() % k as u64) as usize
    }
}
