//! Stochastic black-box objectives and replicated evaluation.
//!
//! An objective is a function `f(x, ω)` whose randomness `ω` is supplied as a
//! [`Stream`]. The quantity being optimised is its expectation over `ω`,
//! estimated by averaging `n_rep` independent replications.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stream::Stream;

/// Box-shaped feasible region, one closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSpace {
    bounds: Vec<(f64, f64)>,
}

impl DecisionSpace {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("decision space needs at least one coordinate"));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "coordinate {i}: lower bound {lo} must be finite and below upper bound {hi}"
                )));
            }
        }
        Ok(DecisionSpace { bounds })
    }

    /// One-dimensional space `[lower, upper]`.
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![(lower, upper)])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.bounds[i].0
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.bounds[i].1
    }

    pub fn range(&self, i: usize) -> f64 {
        self.bounds[i].1 - self.bounds[i].0
    }

    pub fn check(&self, x: &Candidate) -> Result<()> {
        if x.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.dimension(),
            });
        }
        for (index, (&value, &(lower, upper))) in x.coords().iter().zip(&self.bounds).enumerate() {
            if !(lower..=upper).contains(&value) {
                return Err(Error::OutOfBounds {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &Candidate) -> bool {
        self.check(x).is_ok()
    }

    /// Uniform draw from the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Candidate {
        Candidate(
            self.bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect(),
        )
    }

    pub fn clamp(&self, coords: Vec<f64>) -> Candidate {
        Candidate(
            coords
                .into_iter()
                .zip(&self.bounds)
                .map(|(v, &(lo, hi))| v.clamp(lo, hi))
                .collect(),
        )
    }
}

/// A point in decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate(pub Vec<f64>);

impl Candidate {
    pub fn scalar(x: f64) -> Self {
        Candidate(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// First coordinate; the queue problem is one-dimensional.
    pub fn first(&self) -> f64 {
        self.0[0]
    }
}

impl From<Vec<f64>> for Candidate {
    fn from(v: Vec<f64>) -> Self {
        Candidate(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// Strict improvement of `candidate` over `incumbent`.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Minimize => candidate < incumbent,
            Direction::Maximize => candidate > incumbent,
        }
    }

    /// Value every finite mean improves on.
    pub fn worst_value(self) -> f64 {
        match self {
            Direction::Minimize => f64::INFINITY,
            Direction::Maximize => f64::NEG_INFINITY,
        }
    }
}

/// Replicated-sample statistics for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean: f64,
    /// Sample standard deviation, divisor `n_rep - 1`; zero for a single replication.
    pub std: f64,
    pub n_rep: usize,
    pub samples: Option<Vec<f64>>,
}

impl Evaluation {
    pub fn from_samples(samples: Vec<f64>, keep_samples: bool) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::invalid("an evaluation needs at least one replication"));
        }
        let (mean, std) = mean_std(&samples);
        Ok(Evaluation {
            mean,
            std,
            n_rep: n,
            samples: keep_samples.then_some(samples),
        })
    }
}

/// Mean and sample standard deviation. Identical samples give their common
/// value and exactly zero spread.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    if samples.iter().all(|s| s.to_bits() == samples[0].to_bits()) {
        return (samples[0], 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|s| (s - mean) * (s - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// A noisy black-box performance measure `f(x, ω)`.
///
/// Implementations must be pure functions of `(x, stream)`: all randomness is
/// drawn from `stream`, and no interior mutability may influence the value.
pub trait StochasticObjective: Sync {
    fn sample(&self, x: &Candidate, stream: Stream) -> Result<f64>;
}

impl<T: StochasticObjective + ?Sized> StochasticObjective for &T {
    fn sample(&self, x: &Candidate, stream: Stream) -> Result<f64> {
        (**self).sample(x, stream)
    }
}

/// Noise-free objective `f(x)` on a bounded space.
pub struct Deterministic<F> {
    space: DecisionSpace,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Deterministic<F> {
    pub fn new(space: DecisionSpace, f: F) -> Self {
        Deterministic { space, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> StochasticObjective for Deterministic<F> {
    fn sample(&self, x: &Candidate, _stream: Stream) -> Result<f64> {
        self.space.check(x)?;
        Ok((self.f)(x.coords()))
    }
}

/// Wraps an objective and counts how many samples were drawn through it.
pub struct Counting<O> {
    inner: O,
    count: AtomicU64,
}

impl<O> Counting<O> {
    pub fn new(inner: O) -> Self {
        Counting {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: StochasticObjective> StochasticObjective for Counting<O> {
    fn sample(&self, x: &Candidate, stream: Stream) -> Result<f64> {
        // Counter is observational only; it never feeds back into the value.
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.sample(x, stream)
    }
}

/// Draws replications `range` of `x`, replication `j` using `stream.child(j)`.
pub fn sample_replications<O: StochasticObjective + ?Sized>(
    model: &O,
    x: &Candidate,
    stream: Stream,
    range: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    range
        .map(|j| model.sample(x, stream.child(j as u64)))
        .collect()
}

/// Mean/std of `n_rep` replications of `x`.
pub fn evaluate<O: StochasticObjective + ?Sized>(
    model: &O,
    x: &Candidate,
    n_rep: usize,
    stream: Stream,
) -> Result<Evaluation> {
    evaluate_continuing(model, x, n_rep, stream, Vec::new(), false)
}

/// Like [`evaluate`] but replications run on the rayon pool. Bit-identical to
/// the serial version.
pub fn evaluate_parallel<O: StochasticObjective + ?Sized>(
    model: &O,
    x: &Candidate,
    n_rep: usize,
    stream: Stream,
) -> Result<Evaluation> {
    if n_rep == 0 {
        return Err(Error::invalid("n_rep must be at least 1"));
    }
    let samples = (0..n_rep)
        .into_par_iter()
        .map(|j| model.sample(x, stream.child(j as u64)))
        .collect::<Result<Vec<f64>>>()?;
    Evaluation::from_samples(samples, false)
}

/// Completes an evaluation whose first `prefix.len()` replications were already
/// drawn from `stream` (e.g. by a pilot screen). The result equals a fresh
/// [`evaluate`] call on the same stream.
pub fn evaluate_continuing<O: StochasticObjective + ?Sized>(
    model: &O,
    x: &Candidate,
    n_rep: usize,
    stream: Stream,
    mut prefix: Vec<f64>,
    keep_samples: bool,
) -> Result<Evaluation> {
    if n_rep == 0 {
        return Err(Error::invalid("n_rep must be at least 1"));
    }
    if prefix.len() > n_rep {
        return Err(Error::invalid(format!(
            "{} pilot replications exceed n_rep = {n_rep}",
            prefix.len()
        )));
    }
    let rest = sample_replications(model, x, stream, prefix.len()..n_rep)?;
    prefix.extend(rest);
    Evaluation::from_samples(prefix, keep_samples)
}
