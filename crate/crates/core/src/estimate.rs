//! Monte Carlo estimates, compensated accumulation and deterministic
//! parallel reduction.
//!
//! Every random walk or sample owns a ChaCha stream derived from
//! `(seed, index)`, and partial sums are combined in chunk order, so a
//! result depends on the seed and sample count but never on the number
//! of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Samples dropped (for example walks that hit the step cap).
    #[serde(default)]
    pub discarded: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0, samples: 0, seed: 0, discarded: 0 }
    }

    /// Fraction of attempted samples that were dropped.
    pub fn discarded_fraction(&self) -> f64 {
        let total = self.samples + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }

    /// `|value - reference| <= k * stderr`, with a small absolute slack for
    /// exact (zero-variance) estimates.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        let slack = 1e-12 * reference.abs().max(1e-300);
        (self.value - reference).abs() <= k * self.stderr + slack
    }
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running first and second moments of a sample stream.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
    pub count: u64,
    pub discarded: u64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
        self.count += 1;
    }

    pub fn discard(&mut self) {
        self.discarded += 1;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.sum.add(other.sum.value());
        self.sum_sq.add(other.sum_sq.value());
        self.count += other.count;
        self.discarded += other.discarded;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn into_estimate(self, seed: u64) -> Estimate {
        Estimate {
            value: self.mean(),
            stderr: self.stderr(),
            samples: self.count,
            seed,
            discarded: self.discarded,
        }
    }
}

/// Independent generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples per reduction chunk. Fixed so the summation tree is independent
/// of the thread count.
pub const CHUNK: usize = 512;

/// Deterministic parallel reduction over `n` indices.
///
/// `per_chunk(range)` accumulates a chunk; chunks are merged in index order.
pub fn chunked_reduce<A, F, M>(n: usize, jobs: usize, per_chunk: F, merge: M) -> Result<A>
where
    A: Send + Default,
    F: Fn(std::ops::Range<usize>) -> A + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunks = n.div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n);
    let parts: Vec<A> = if jobs <= 1 || chunks <= 1 {
        (0..chunks).map(|c| per_chunk(range(c))).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(|c| per_chunk(range(c))).collect())
    };
    let mut acc = A::default();
    for p in parts {
        merge(&mut acc, p);
    }
    Ok(acc)
}

/// Default thread count: `SEGBUBBLE_JOBS` or the available parallelism.
pub fn default_jobs() -> usize {
    std::env::var("SEGBUBBLE_JOBS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&j: &usize| j > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn moments_of_known_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert!((m.mean() - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((m.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reduction_independent_of_jobs() {
        let run = |jobs| {
            chunked_reduce(
                5000,
                jobs,
                |r| {
                    let mut m = Moments::default();
                    for i in r {
                        let mut rng = sample_rng(7, i as u64);
                        m.push(rng.gen::<f64>());
                    }
                    m
                },
                |a, b| a.merge(&b),
            )
            .unwrap()
            .into_estimate(7)
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn streams_differ() {
        let mut a = sample_rng(1, 0);
        let mut b = sample_rng(1, 1);
        assert_ne!(a.gen::<u64>(), b.gen::<u64>());
    }
}
