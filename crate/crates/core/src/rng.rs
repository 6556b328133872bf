//! Portable seeded random stream.
//!
//! All generated scenario content draws from SplitMix64 (Steele, Lea and
//! Flood), which is small enough to reimplement in any language. Bounded
//! integers use rejection sampling so they are exactly uniform:
//!
//! ```text
//! n    = hi - lo + 1
//! zone = floor(2^64 / n) * n     (computed as (u64::MAX / n) * n)
//! draw x = next_u64() until x < zone; return lo + x mod n
//! ```

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: SplitMix64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        let n = span + 1;
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return lo + x % n;
            }
        }
    }

    /// Fisher-Yates, walking from the last index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.uniform_inclusive(0, i as u64) as usize;
            items.swap(i, j);
        }
    }
}
