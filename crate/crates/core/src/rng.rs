//! Reproducible Gaussian sample streams.
//!
//! A stream is cut into fixed-size blocks and every block draws from its own
//! ChaCha8 generator keyed by `(seed, label, block index)`. Work is mapped over
//! blocks in parallel and the per-block results come back in block order, so
//! any reduction done in that order is identical for every thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Identifier recorded in reports next to every seed.
pub const ALGORITHM_ID: &str = "chacha8-splitmix-blocks-v1";

/// Vectors per block.
pub const BLOCK_VECTORS: usize = 8192;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Generator for one labelled substream block.
pub fn substream(seed: u64, label: &str, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ fnv1a(label.as_bytes());
    state = splitmix64(state) ^ splitmix64(block.wrapping_add(0x5851_f42d_4c95_7f2d));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `count` i.i.d. `N(0, σ²)` vectors of length `n`, addressed by `(seed, label)`.
#[derive(Clone, Debug)]
pub struct GaussianStream {
    pub seed: u64,
    pub label: String,
    pub n: usize,
    pub count: usize,
    pub sigma: f64,
}

impl GaussianStream {
    pub fn new(seed: u64, label: impl Into<String>, n: usize, count: usize, sigma: f64) -> Self {
        Self { seed, label: label.into(), n, count, sigma }
    }

    pub fn blocks(&self) -> usize {
        self.count.div_ceil(BLOCK_VECTORS)
    }

    /// Row-major samples of block `b`.
    pub fn block(&self, b: usize) -> Vec<f64> {
        let rows = BLOCK_VECTORS.min(self.count - b * BLOCK_VECTORS);
        let mut rng = substream(self.seed, &self.label, b as u64);
        (0..rows * self.n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.sigma * z
            })
            .collect()
    }

    /// Applies `f` to every block in parallel; results are in block order.
    pub fn map_blocks<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &[f64]) -> T + Sync,
    {
        (0..self.blocks()).into_par_iter().map(|b| f(b, &self.block(b))).collect()
    }

    /// All samples, row-major.
    pub fn collect(&self) -> Vec<f64> {
        self.map_blocks(|_, rows| rows.to_vec()).concat()
    }
}

/// Mean and sum of squared deviations, merged pairwise in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_addressable() {
        let s = GaussianStream::new(7, "t", 3, 2 * BLOCK_VECTORS + 5, 1.0);
        assert_eq!(s.blocks(), 3);
        assert_eq!(s.block(2).len(), 15);
        let all = s.collect();
        assert_eq!(all.len(), 3 * s.count);
        assert_eq!(&all[2 * BLOCK_VECTORS * 3..], &s.block(2)[..]);
    }

    #[test]
    fn labels_and_seeds_separate_streams() {
        let a = GaussianStream::new(1, "a", 2, 10, 1.0).block(0);
        assert_ne!(a, GaussianStream::new(1, "b", 2, 10, 1.0).block(0));
        assert_ne!(a, GaussianStream::new(2, "a", 2, 10, 1.0).block(0));
        assert_eq!(a, GaussianStream::new(1, "a", 2, 10, 1.0).block(0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let s = GaussianStream::new(3, "threads", 4, 3 * BLOCK_VECTORS, 1.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                let parts = s.map_blocks(|_, rows| {
                    let mut m = Moments::default();
                    rows.iter().for_each(|&v| m.push(v));
                    m
                });
                parts.iter().fold(Moments::default(), |mut acc, m| {
                    acc.merge(m);
                    acc
                })
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&v| whole.push(v));
        let mut left = Moments::default();
        let mut right = Moments::default();
        xs[..31].iter().for_each(|&v| left.push(v));
        xs[31..].iter().for_each(|&v| right.push(v));
        left.merge(&right);
        assert!((left.mean - whole.mean).abs() < 1e-14);
        assert!((left.m2 - whole.m2).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_moments() {
        let s = GaussianStream::new(11, "moments", 1, 200_000, 2.0);
        let mut m = Moments::default();
        s.collect().iter().for_each(|&v| m.push(v));
        assert!(m.mean.abs() < 4.0 * 2.0 / (200_000f64).sqrt());
        assert!((m.variance() - 4.0).abs() < 0.05);
    }
}
