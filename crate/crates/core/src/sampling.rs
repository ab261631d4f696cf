//! Reproducible sharded random streams and Gaussian NEF draws.

use crate::model::SignalDistribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent stream for one shard; the partition of work never changes the draws
/// inside a shard.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Split `total` items across `shards` as evenly as possible.
pub fn shard_sizes(total: usize, shards: usize) -> Vec<usize> {
    let shards = shards.max(1);
    (0..shards).map(|s| total / shards + usize::from(s < total % shards)).collect()
}

/// Draws from the limit law `N(0, diag(f) - f f')` through the rank-(K-1) factor
/// `(I - f 1') diag(sqrt f)`.
#[derive(Debug, Clone)]
pub struct NefSampler {
    f: Vec<f64>,
    sqrt_f: Vec<f64>,
}

impl NefSampler {
    pub fn new(dist: &SignalDistribution) -> Self {
        Self { f: dist.f.clone(), sqrt_f: dist.f.iter().map(|p| p.sqrt()).collect() }
    }

    pub fn k(&self) -> usize {
        self.f.len()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, h: &mut [f64]) {
        let mut s = 0.0;
        for (hk, sf) in h.iter_mut().zip(&self.sqrt_f) {
            let z: f64 = rng.sample(StandardNormal);
            *hk = sf * z;
            s += *hk;
        }
        for (hk, fk) in h.iter_mut().zip(&self.f) {
            *hk -= fk * s;
        }
    }
}

/// Running sums for means and standard errors.
#[derive(Debug, Clone, Default)]
pub struct Moments1 {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Moments1 {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, sum: vec![0.0; dim], sumsq: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for i in 0..x.len() {
            self.sum[i] += x[i];
            self.sumsq[i] += x[i] * x[i];
        }
    }

    /// Record `count` all-zero observations.
    pub fn push_zeros(&mut self, count: usize) {
        self.n += count;
    }

    pub fn merge(&mut self, other: &Moments1) {
        self.n += other.n;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sumsq[i] += other.sumsq[i];
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    pub fn se(&self, i: usize) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return f64::INFINITY;
        }
        let m = self.sum[i] / n;
        let var = ((self.sumsq[i] / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}
