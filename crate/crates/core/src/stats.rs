//! Streaming moment accumulators and a deterministic parallel reduction over
//! sample indices.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Samples per work unit. Fixed so that the reduction tree, and hence every
/// rounding, does not depend on the thread count.
pub const CHUNK: u64 = 256;

/// Welford accumulator for a real sample.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Independent real/imaginary accumulators for a complex sample.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexAccumulator {
    pub re: Accumulator,
    pub im: Accumulator,
}

impl ComplexAccumulator {
    pub fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, other: &ComplexAccumulator) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean(), self.im.mean())
    }

    /// Real and imaginary standard errors combined in quadrature.
    pub fn stderr(&self) -> f64 {
        self.re.stderr().hypot(self.im.stderr())
    }

    pub fn count(&self) -> u64 {
        self.re.count()
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McValue<T> {
    pub value: T,
    pub stderr: f64,
}

impl From<&ComplexAccumulator> for McValue<Complex64> {
    fn from(acc: &ComplexAccumulator) -> Self {
        McValue { value: acc.mean(), stderr: acc.stderr() }
    }
}

impl From<&Accumulator> for McValue<f64> {
    fn from(acc: &Accumulator) -> Self {
        McValue { value: acc.mean(), stderr: acc.stderr() }
    }
}

/// Things that can be combined after a chunked reduction.
pub trait Mergeable: Send {
    fn merge_from(&mut self, other: Self);
}

impl Mergeable for Accumulator {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl Mergeable for ComplexAccumulator {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl<T: Mergeable> Mergeable for Vec<T> {
    fn merge_from(&mut self, other: Self) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            a.merge_from(b);
        }
    }
}

/// Runs `body(acc, index)` for every index in `0..samples`, in parallel over
/// fixed-size chunks, then merges the chunk states in index order.
pub fn reduce_samples<A, I, B>(samples: u64, init: I, body: B) -> A
where
    A: Mergeable,
    I: Fn() -> A + Sync,
    B: Fn(&mut A, u64) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(samples);
            for i in c * CHUNK..end {
                body(&mut acc, i);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partials {
        total.merge_from(p);
    }
    total
}
