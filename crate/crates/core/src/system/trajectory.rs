use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Vector samples `f(s_0), …, f(s_N)` on strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath<T: Scalar> {
    pub times: Vec<T>,
    pub values: Vec<DVector<T>>,
}

impl<T: Scalar> SampledPath<T> {
    pub fn new(times: Vec<T>, values: Vec<DVector<T>>) -> Result<Self> {
        if times.is_empty() || values.is_empty() {
            return Err(Error::EmptySamples);
        }
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} sample times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample times must be strictly increasing".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension("sample values differ in length".into()));
        }
        Ok(Self { times, values })
    }

    /// Samples a scalar function on the given times.
    pub fn from_fn(times: Vec<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = times.iter().map(|&t| DVector::from_element(1, f(t))).collect();
        Self::new(times, values)
    }

    /// `n + 1` equispaced nodes on `[a, b]`, last node exactly `b`.
    pub fn uniform_times(a: T, b: T, n: usize) -> Vec<T> {
        let h = (b - a) / T::from_usize_lossy(n);
        (0..=n)
            .map(|j| if j == n { b } else { a + h * T::from_usize_lossy(j) })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        self.times[self.times.len() - 1]
    }

    pub fn first(&self) -> &DVector<T> {
        &self.values[0]
    }

    pub fn last(&self) -> &DVector<T> {
        &self.values[self.values.len() - 1]
    }

    /// Piecewise-linear interpolation; `None` outside `[start, end]`.
    pub fn interpolate(&self, t: T) -> Option<DVector<T>> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let j = self.times.partition_point(|&s| s < t);
        if j == 0 || self.times[j] == t {
            return Some(self.values[j].clone());
        }
        let (a, b) = (self.times[j - 1], self.times[j]);
        let w = (t - a) / (b - a);
        Some(&self.values[j - 1] * (T::one() - w) + &self.values[j] * w)
    }
}

/// Piecewise-continuous state path on `[0, b]`.
///
/// Segment `i` samples the closed interval `[t_i, t_{i+1}]`: its first node
/// holds the right limit `x(t_i⁺)` (the initial value on segment 0) and its
/// last node the left limit `x(t_{i+1}⁻)`. The path is left-continuous, so
/// `x(t_i) = x(t_i⁻)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar> {
    pub segments: Vec<SampledPath<T>>,
    /// `x(t_i⁻)` for `i = 1..m`.
    pub left_limits: Vec<DVector<T>>,
    /// `x(t_i⁺)` for `i = 1..m`.
    pub right_limits: Vec<DVector<T>>,
    /// Applied jumps `x(t_i⁺) - x(t_i⁻)`.
    pub jumps: Vec<DVector<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn from_segments(segments: Vec<SampledPath<T>>) -> Self {
        let left_limits: Vec<_> = segments
            .iter()
            .take(segments.len().saturating_sub(1))
            .map(|s| s.last().clone())
            .collect();
        let right_limits: Vec<_> = segments.iter().skip(1).map(|s| s.first().clone()).collect();
        let jumps = right_limits.iter().zip(&left_limits).map(|(r, l)| r - l).collect();
        Self {
            segments,
            left_limits,
            right_limits,
            jumps,
        }
    }

    /// The same value at every node of the given per-segment grids.
    pub fn constant(grids: &[Vec<T>], value: &DVector<T>) -> Self {
        let segments = grids
            .iter()
            .map(|times| SampledPath {
                times: times.clone(),
                values: vec![value.clone(); times.len()],
            })
            .collect();
        Self::from_segments(segments)
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, |s| s.dim())
    }

    pub fn horizon(&self) -> T {
        self.segments.last().map_or(T::zero(), |s| s.end())
    }

    /// `x(0)`.
    pub fn initial(&self) -> &DVector<T> {
        self.segments[0].first()
    }

    /// `x(t_k)` for `k = 1..=m+1`: the end of segment `k - 1`.
    pub fn at_boundary(&self, k: usize) -> Result<&DVector<T>> {
        if k == 0 || k > self.segments.len() {
            return Err(Error::Index {
                index: k,
                valid: format!("1..={}", self.segments.len()),
            });
        }
        Ok(self.segments[k - 1].last())
    }

    /// Left-continuous evaluation with linear interpolation inside segments.
    pub fn eval(&self, t: T) -> Result<DVector<T>> {
        let first = self.segments.first().ok_or(Error::EmptySamples)?;
        if !(t >= first.start()) || t > self.horizon() {
            return Err(Error::Coverage(t.to_f64_lossy()));
        }
        if t == first.start() {
            return Ok(first.first().clone());
        }
        // first segment whose end is at or beyond t: t ∈ (start, end]
        let seg = self
            .segments
            .iter()
            .find(|s| t <= s.end())
            .ok_or(Error::Coverage(t.to_f64_lossy()))?;
        seg.interpolate(t).ok_or(Error::Coverage(t.to_f64_lossy()))
    }

    /// Largest Euclidean distance between corresponding nodes.
    pub fn node_distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (a, b) in self.segments.iter().zip(&other.segments) {
            for (x, y) in a.values.iter().zip(&b.values) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    /// `self + c (other - self)` node by node; grids must agree.
    pub fn blend(&self, other: &Self, c: T) -> Self {
        let segments = self
            .segments
            .iter()
            .zip(&other.segments)
            .map(|(a, b)| SampledPath {
                times: a.times.clone(),
                values: a
                    .values
                    .iter()
                    .zip(&b.values)
                    .map(|(x, y)| x + (y - x) * c)
                    .collect(),
            })
            .collect();
        Self::from_segments(segments)
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }
}
