//! Chunked sample loops with a rayon backend and a sequential fallback.
//!
//! Samples are split into fixed-size chunks, each chunk produces a partial
//! [`MeanAccumulator`], and partials are merged in chunk order. Because the
//! chunking never depends on the thread count, results are bit-identical
//! whether the loop runs on one worker, many, or sequentially.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per work item.
pub const CHUNK_SIZE: u64 = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon global pool when the `parallel` feature is on,
    /// otherwise identical to `Sequential`.
    #[default]
    Parallel,
}

/// Independent per-sample RNG streams derived from one seed.
#[derive(Clone, Debug)]
pub struct Substreams {
    base: ChaCha8Rng,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Substreams { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Generator for sample `index`; the same `(seed, index)` always yields
    /// the same stream.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut r = self.base.clone();
        r.set_stream(index);
        r.set_word_pos(0);
        r
    }
}

/// Running sum and sum of squares with Neumaier compensation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    sum: Neumaier,
    sum_sq: Neumaier,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let s = self.sum.value();
        ((self.sum_sq.value() - s * s / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Runs `chunk` over `[0, n)` split into [`CHUNK_SIZE`] ranges and merges the
/// partials in order.
pub fn accumulate<F>(n: u64, exec: Execution, chunk: F) -> MeanAccumulator
where
    F: Fn(Range<u64>) -> MeanAccumulator + Sync + Send,
{
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    let range = move |c: u64| c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(n);
    let partials: Vec<MeanAccumulator> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_chunks).into_par_iter().map(|c| chunk(range(c))).collect()
        }
        _ => (0..n_chunks).map(|c| chunk(range(c))).collect(),
    };
    let mut total = MeanAccumulator::default();
    for p in &partials {
        total.merge(p);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = Substreams::new(42);
        let a: u64 = s.stream(3).random();
        let b: u64 = s.stream(3).random();
        let c: u64 = s.stream(4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(Substreams::new(43).stream(3).random::<u64>(), a);
    }

    #[test]
    fn accumulator_moments() {
        let mut m = MeanAccumulator::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.std_error() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let mut m = MeanAccumulator::default();
        m.push(1e16);
        for _ in 0..1000 {
            m.push(1.0);
        }
        m.push(-1e16);
        assert_eq!(m.sum.value(), 1000.0);
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let streams = Substreams::new(9);
        let f = |r: Range<u64>| {
            let mut acc = MeanAccumulator::default();
            for i in r {
                acc.push(streams.stream(i).random::<f64>());
            }
            acc
        };
        let n = 10 * CHUNK_SIZE + 17;
        let a = accumulate(n, Execution::Sequential, f);
        let b = accumulate(n, Execution::Parallel, f);
        assert_eq!(a, b);
        assert_eq!(a.count(), n);
    }
}
