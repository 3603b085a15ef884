//! Counter-based normal variates.
//!
//! Every draw is a pure function of `(seed, path, step)`, so any subset of a
//! Monte Carlo batch can be regenerated in any order on any number of
//! threads with identical results. The uniform stream is SplitMix64 addressed
//! by position: a stream key is derived from `(seed, path)` and the `step`-th
//! output is the SplitMix64 finalizer applied to `key + (step + 1) * γ`.
//! Normals come from the inverse CDF.

use crate::special::norm_inv_cdf;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one independent stream of variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u64,
}

impl StreamKey {
    pub fn new(seed: u64, path: u64) -> Self {
        Self { seed, path }
    }

    #[inline]
    fn stream(&self) -> u64 {
        mix64(mix64(self.seed ^ 0x6a09_e667_f3bc_c909).wrapping_add(self.path.wrapping_mul(GAMMA)))
    }

    #[inline]
    pub fn bits(&self, step: u64) -> u64 {
        mix64(
            self.stream()
                .wrapping_add(step.wrapping_add(1).wrapping_mul(GAMMA)),
        )
    }

    /// Uniform in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&self, step: u64) -> f64 {
        ((self.bits(step) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&self, step: u64) -> f64 {
        norm_inv_cdf(self.uniform(step))
    }

    /// `n` consecutive standard normals starting at step 0.
    pub fn normals(&self, n: usize) -> Vec<f64> {
        let stream = self.stream();
        (0..n as u64)
            .map(|step| {
                let bits = mix64(stream.wrapping_add(step.wrapping_add(1).wrapping_mul(GAMMA)));
                norm_inv_cdf(((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64))
            })
            .collect()
    }
}

impl From<u64> for StreamKey {
    fn from(seed: u64) -> Self {
        Self { seed, path: 0 }
    }
}

/// Sub-seed for a subsystem: `mix(mix(seed ^ fnv(tag)) + index·γ)`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    // FNV-1a over the tag bytes.
    let tag_hash = tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    mix64(mix64(seed ^ tag_hash).wrapping_add(index.wrapping_mul(GAMMA)))
}
