//! Fractional integral, Caputo derivative and the Volterra operator on
//! sampled paths.

use nalgebra::DVector;

use super::{SampledPath, Trajectory, VolterraKernel};
use crate::error::{Error, Result};
use crate::mlfunc::FracOrder;
use crate::scalar::{pow0, Scalar};
use crate::special::gamma;

/// Moments of `(t - s)^(α-1)` against the two linear hat functions of the
/// cell `[a, b]`, with `t >= b`. Not divided by `Γ(α)`.
fn cell_moments<T: Scalar>(alpha: T, t: T, a: T, b: T) -> (T, T) {
    let big = t - a;
    let small = t - b;
    let p = pow0(big, alpha) - pow0(small, alpha);
    let p1 = (pow0(big, alpha + T::one()) - pow0(small, alpha + T::one())) / (alpha + T::one());
    let width = b - a;
    let left = (p1 - small * p / alpha) / width;
    let right = (big * p / alpha - p1) / width;
    (left, right)
}

/// `I^α f` at every sample time by the product-trapezoid rule with exact
/// kernel moments on each cell.
pub fn fractional_integral<T: Scalar>(alpha: T, samples: &SampledPath<T>) -> Result<SampledPath<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(alpha > T::zero()) {
        return Err(Error::Domain(format!("fractional integral needs alpha > 0, got {alpha}")));
    }
    let g = gamma(alpha);
    let times = &samples.times;
    let f = &samples.values;
    let mut out = Vec::with_capacity(times.len());
    for j in 0..times.len() {
        let mut acc = DVector::zeros(samples.dim());
        for l in 0..j {
            let (wl, wr) = cell_moments(alpha, times[j], times[l], times[l + 1]);
            acc += &f[l] * wl + &f[l + 1] * wr;
        }
        out.push(acc / g);
    }
    Ok(SampledPath {
        times: times.clone(),
        values: out,
    })
}

/// Caputo derivative with lower limit at the first sample, as `I^(1-q)`
/// of the piecewise-constant finite-difference derivative (the L1 scheme).
/// For `q = 1` it is the slope of the cell ending at or containing `t`.
pub fn caputo_derivative<T: Scalar>(q: FracOrder<T>, samples: &SampledPath<T>, t: T) -> Result<DVector<T>> {
    if samples.len() < 2 {
        return Err(Error::EmptySamples);
    }
    if !(t > samples.start()) {
        return Err(Error::Domain(format!(
            "Caputo derivative needs t > {} (one-sided data at the lower limit), got {t}",
            samples.start()
        )));
    }
    if t > samples.end() {
        return Err(Error::Coverage(t.to_f64_lossy()));
    }
    Ok(caputo_l1(q.value(), &samples.times, &samples.values, t))
}

pub(crate) fn caputo_l1<T: Scalar>(q: T, times: &[T], values: &[DVector<T>], t: T) -> DVector<T> {
    let n = values[0].len();
    if q == T::one() {
        let j = times.partition_point(|&s| s < t).max(1);
        return (&values[j] - &values[j - 1]) / (times[j] - times[j - 1]);
    }
    let exponent = T::one() - q;
    let mut acc = DVector::zeros(n);
    for l in 0..times.len() - 1 {
        let (a, b) = (times[l], times[l + 1]);
        if a >= t {
            break;
        }
        let slope = (&values[l + 1] - &values[l]) / (b - a);
        let upper = if b < t { b } else { t };
        let w = pow0(t - a, exponent) - pow0(t - upper, exponent);
        acc += slope * w;
    }
    acc / gamma(T::lit(2.0) - q)
}

/// `(Hx)(t) = ∫_0^t h(t, s, x(s)) ds` by the composite trapezoid rule on the
/// trajectory grid, split at the impulse instants.
pub fn volterra_apply<T: Scalar>(h: &VolterraKernel<T>, traj: &Trajectory<T>, t: T) -> Result<DVector<T>> {
    let first = traj.segments.first().ok_or(Error::EmptySamples)?;
    if !(t >= first.start()) || t > traj.horizon() {
        return Err(Error::Coverage(t.to_f64_lossy()));
    }
    let mut acc = DVector::zeros(traj.dim());
    for seg in &traj.segments {
        if seg.start() >= t {
            break;
        }
        let mut prev_s = seg.times[0];
        let mut prev_v = h(t, prev_s, &seg.values[0]);
        for (&s, x) in seg.times.iter().zip(&seg.values).skip(1) {
            let (s_end, v_end) = if s <= t {
                (s, h(t, s, x))
            } else {
                let xt = seg.interpolate(t).ok_or(Error::Coverage(t.to_f64_lossy()))?;
                (t, h(t, t, &xt))
            };
            acc += (&prev_v + &v_end) * ((s_end - prev_s) * T::lit(0.5));
            if s >= t {
                break;
            }
            prev_s = s_end;
            prev_v = v_end;
        }
    }
    Ok(acc)
}
