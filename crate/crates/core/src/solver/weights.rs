//! Product-trapezoid weights for `∫_0^{t_j} (t_j - s)^(γ-1) φ(s) ds` on a
//! uniform grid, with `φ` replaced by its piecewise-linear interpolant.
//!
//! With `h^γ / (γ(γ+1))` factored out, node `l` of the sum for node `j` gets
//! `c_0 = 1` at `l = j`, `c_{j-l}` for `0 < l < j`, and `e_j` at `l = 0`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct ProductWeights<T: Scalar> {
    /// Kernel exponent plus one: the kernel is `(t - s)^(γ-1)`.
    gamma: T,
    /// `c_k = (k+1)^(γ+1) - 2k^(γ+1) + (k-1)^(γ+1)`, `c_0 = 1`.
    c: Vec<T>,
    /// `e_j = (j-1)^(γ+1) - (j-1-γ) j^γ`; `e[0]` unused.
    e: Vec<T>,
}

impl<T: Scalar> ProductWeights<T> {
    pub(crate) fn new(gamma: T, nodes: usize) -> Self {
        let p = gamma + T::one();
        let mut c = Vec::with_capacity(nodes + 1);
        c.push(T::one());
        for k in 1..=nodes {
            // k^p [(1+x)^p + (1-x)^p - 2] with x = 1/k, avoiding the
            // cancellation of the raw three-term difference
            let kk = T::from_usize_lossy(k);
            let x = T::one() / kk;
            let bracket = (p * x.ln_1p()).exp_m1() + (p * (-x).ln_1p()).exp_m1();
            c.push(kk.powf(p) * bracket);
        }
        let mut e = Vec::with_capacity(nodes + 1);
        e.push(T::zero());
        for j in 1..=nodes {
            // j^p [(1-x)^p - 1 + p x] with x = 1/j
            let jj = T::from_usize_lossy(j);
            let x = T::one() / jj;
            let bracket = (p * (-x).ln_1p()).exp_m1() + p * x;
            e.push(jj.powf(p) * bracket);
        }
        Self { gamma, c, e }
    }

    /// `h^γ / (γ(γ+1))`.
    pub(crate) fn scale(&self, h: T) -> Result<T> {
        let g = self.gamma;
        let s = h.powf(g) / (g * (g + T::one()));
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::WeightUnderflow(format!(
                "step {h} with kernel exponent {g} gives weight scale {s}"
            )));
        }
        Ok(s)
    }

    /// Unscaled weight of node `l` in the rule for node `j >= 1`.
    #[inline]
    pub(crate) fn weight(&self, j: usize, l: usize) -> T {
        if l == j {
            self.c[0]
        } else if l == 0 {
            self.e[j]
        } else {
            self.c[j - l]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_c(g: f64, k: usize) -> f64 {
        let k = k as f64;
        (k + 1.0).powf(g + 1.0) - 2.0 * k.powf(g + 1.0) + (k - 1.0).powf(g + 1.0)
    }

    #[test]
    fn stable_forms_match_direct_formulas() {
        for &g in &[0.3, 0.5, 0.75, 1.0] {
            let w = ProductWeights::<f64>::new(g, 40);
            for k in 1..=40 {
                assert!((w.c[k] - direct_c(g, k)).abs() <= 1e-11 * direct_c(g, k).abs().max(1.0));
                let j = k as f64;
                let direct_e = (j - 1.0).powf(g + 1.0) - (j - 1.0 - g) * j.powf(g);
                assert!((w.e[k] - direct_e).abs() <= 1e-11 * direct_e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn trapezoid_at_unit_exponent() {
        let w = ProductWeights::<f64>::new(1.0, 10);
        assert_eq!(w.weight(5, 5), 1.0);
        assert!((w.weight(5, 0) - 1.0).abs() < 1e-14);
        assert!((w.weight(5, 2) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weights_integrate_constants_exactly() {
        // Σ_l w_{j,l} h^γ/(γ(γ+1)) = (jh)^γ / γ
        let g = 0.4;
        let w = ProductWeights::<f64>::new(g, 64);
        let h = 1.0 / 64.0;
        for j in [1usize, 7, 64] {
            let sum: f64 = (0..=j).map(|l| w.weight(j, l)).sum::<f64>() * w.scale(h).unwrap();
            let exact = (j as f64 * h).powf(g) / g;
            assert!((sum - exact).abs() < 1e-13, "{j}: {sum} vs {exact}");
        }
    }
}
