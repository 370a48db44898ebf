//! Empirical distributions and the comparison statistics used by the
//! verification suites: Kolmogorov–Smirnov, total variation and Wilson
//! score intervals.

use std::cmp::Ordering;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::scalar::Scalar;

/// Asymptotic 99% Kolmogorov quantile.
pub const KOLMOGOROV_99: f64 = 1.63;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains NaN")]
    NanSample,
    #[error("histogram bins differ: {0}")]
    BinMismatch(String),
}

/// Empirical CDF over a sorted copy of the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf<T> {
    sorted: Vec<T>,
}

impl<T: Scalar> Ecdf<T> {
    pub fn new(mut sample: Vec<T>) -> Result<Self, StatsError> {
        if sample.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if sample.iter().any(|x| x.is_nan()) {
            return Err(StatsError::NanSample);
        }
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(Self { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.sorted
    }

    /// Right-continuous evaluation: fraction of the sample `<= x`.
    pub fn eval(&self, x: T) -> T {
        let k = self.sorted.partition_point(|v| *v <= x);
        T::from_count(k) / T::from_count(self.len())
    }

    /// Fraction of the sample strictly below `x`.
    pub fn eval_left(&self, x: T) -> T {
        let k = self.sorted.partition_point(|v| *v < x);
        T::from_count(k) / T::from_count(self.len())
    }

    /// Distinct values with the empirical CDF just below and at each one.
    fn steps(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        let n = T::from_count(self.len());
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= self.sorted.len() {
                return None;
            }
            let v = self.sorted[i];
            let below = T::from_count(i) / n;
            while i < self.sorted.len() && self.sorted[i] == v {
                i += 1;
            }
            Some((v, below, T::from_count(i) / n))
        })
    }
}

/// One-sample KS statistic `sup |F_n - F|` against a continuous CDF,
/// checked on both sides of every jump of `F_n`.
pub fn ks_distance<T: Scalar>(e: &Ecdf<T>, cdf: impl Fn(T) -> T) -> T {
    e.steps().fold(T::zero(), |d, (v, below, at)| {
        let f = cdf(v);
        d.max((at - f).abs()).max((below - f).abs())
    })
}

/// Two-sample KS statistic `sup |F_n - G_m|`.
pub fn ks_two_sample<T: Scalar>(a: &Ecdf<T>, b: &Ecdf<T>) -> T {
    let (xa, xb) = (a.values(), b.values());
    let (na, nb) = (T::from_count(xa.len()), T::from_count(xb.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    while i < xa.len() && j < xb.len() {
        let v = if xa[i] <= xb[j] { xa[i] } else { xb[j] };
        while i < xa.len() && xa[i] == v {
            i += 1;
        }
        while j < xb.len() && xb[j] == v {
            j += 1;
        }
        let diff = (T::from_count(i) / na - T::from_count(j) / nb).abs();
        d = d.max(diff);
    }
    d
}

/// 99% threshold of the one-sample KS statistic for sample size `n`.
pub fn ks_threshold_99(n: usize) -> f64 {
    KOLMOGOROV_99 / (n as f64).sqrt()
}

/// 99% threshold of the two-sample KS statistic.
pub fn ks_two_sample_threshold_99(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KOLMOGOROV_99 * ((n + m) / (n * m)).sqrt()
}

/// Masses over uniform bins on `[lo, hi]`.
///
/// Values outside the support are clamped into the first or last bin, so a
/// finite-population fraction slightly above one lands in the top bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    lo: T,
    hi: T,
    masses: Vec<T>,
}

impl<T: Scalar> Histogram<T> {
    pub fn uniform(lo: T, hi: T, bins: usize) -> Self {
        assert!(bins >= 1, "histogram needs at least one bin");
        assert!(hi > lo, "histogram support must be non-empty");
        Self {
            lo,
            hi,
            masses: vec![T::zero(); bins],
        }
    }

    /// Counts of `sample` per bin, unnormalized.
    pub fn from_sample(sample: &[T], lo: T, hi: T, bins: usize) -> Self {
        let mut h = Self::uniform(lo, hi, bins);
        for &x in sample {
            h.add_value(x, T::one());
        }
        h
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn support(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::from_count(self.bins())
    }

    /// Edges of bin `k`; adjacent bins share their edge exactly.
    pub fn bin_bounds(&self, k: usize) -> (T, T) {
        (self.edge(k), self.edge(k + 1))
    }

    fn edge(&self, k: usize) -> T {
        if k == self.bins() {
            self.hi
        } else {
            self.lo + self.width() * T::from_count(k)
        }
    }

    pub fn bin_of(&self, x: T) -> usize {
        if !(x > self.lo) {
            return 0;
        }
        let k = ((x - self.lo) / self.width()).floor().to_usize().unwrap_or(usize::MAX);
        k.min(self.bins() - 1)
    }

    pub fn add_mass(&mut self, k: usize, m: T) {
        self.masses[k] = self.masses[k] + m;
    }

    pub fn add_value(&mut self, x: T, weight: T) {
        let k = self.bin_of(x);
        self.add_mass(k, weight);
    }

    pub fn total(&self) -> T {
        self.masses.iter().fold(T::zero(), |a, &m| a + m)
    }

    /// Rescaled to unit total mass; an all-zero histogram is returned unchanged.
    pub fn normalized(&self) -> Self {
        let total = self.total();
        let mut out = self.clone();
        if total > T::zero() {
            out.masses.iter_mut().for_each(|m| *m = *m / total);
        }
        out
    }

    fn check_same_bins(&self, other: &Self) -> Result<(), StatsError> {
        if self.lo != other.lo || self.hi != other.hi || self.bins() != other.bins() {
            return Err(StatsError::BinMismatch(format!(
                "[{}, {}]x{} vs [{}, {}]x{}",
                self.lo,
                self.hi,
                self.bins(),
                other.lo,
                other.hi,
                other.bins()
            )));
        }
        Ok(())
    }

    /// Adds the raw masses of `other`; associative and commutative.
    pub fn merge(&mut self, other: &Self) -> Result<(), StatsError> {
        self.check_same_bins(other)?;
        for (a, &b) in self.masses.iter_mut().zip(&other.masses) {
            *a = *a + b;
        }
        Ok(())
    }
}

/// Total variation distance `1/2 sum |p - q|` between the normalized histograms.
pub fn tv_distance<T: Scalar>(h1: &Histogram<T>, h2: &Histogram<T>) -> Result<T, StatsError> {
    h1.check_same_bins(h2)?;
    let (p, q) = (h1.normalized(), h2.normalized());
    let sum = p
        .masses
        .iter()
        .zip(&q.masses)
        .fold(T::zero(), |a, (&x, &y)| a + (x - y).abs());
    Ok(sum / T::lit(2.0))
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn normal_quantile_two_sided(level: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    std.inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials, "need 0 <= successes <= trials, trials >= 1");
    let z = normal_quantile_two_sided(level);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Sample mean and its standard error.
pub fn mean_and_standard_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
